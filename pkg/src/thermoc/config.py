"""Simulation configuration: dataclasses, JSON loading, CLI overrides.

A config file is a JSON object whose top-level keys mirror SimConfig's
fields; nested sections (thermal, trojan, detector, response, ...) are
objects as well. Unknown keys are rejected with the offending key named.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .errors import ConfigError


@dataclass
class TrafficConfig:
    pir: float = 0.05
    mode: str = "uniform"            # uniform | trace | mixed
    trace_path: Optional[str] = None

    def validate(self) -> None:
        if not 0.0 <= self.pir <= 1.0:
            raise ConfigError("traffic.pir must be in [0, 1]")
        if self.mode not in ("uniform", "trace", "mixed"):
            raise ConfigError("traffic.mode must be uniform, trace or mixed")
        if self.mode in ("trace", "mixed") and not self.trace_path:
            raise ConfigError("traffic.trace_path required for trace/mixed mode")


@dataclass
class ThermalConfig:
    t_ambient: float = 45.0
    alpha: float = 2.0               # deg C per watt per step
    beta: float = 0.05               # leakage-to-ambient per step
    gamma: float = 0.01              # lateral diffusion per neighbor per step
    p_idle: float = 0.15             # watts
    p_per_flit: float = 0.002        # watts per switched flit per step
    p_core: float = 0.2              # core compute power at full frequency
    step_cycles: int = 10
    # Ambient/process power jitter: stationary AR(1) noise added to tile
    # power before the thermal update. Gives sensor streams realistic slow
    # wander without touching the update equation itself.
    jitter_std: float = 0.02         # watts, stationary std
    jitter_corr_steps: float = 64.0  # AR(1) correlation time, in thermal steps
    core_offset_per_inject: float = 0.5   # deg C per injected packet this step
    core_offset_max: float = 8.0     # cap on the core-vs-router offset
    # Thermal-management throttle hook: per-router core frequency scaling
    # driven by the reported temperature. When disabled the core frequency
    # stays fixed at full speed.
    dtm_enabled: bool = True
    dtm_t_hot: float = 58.0          # throttle down above this reported temp
    dtm_deadband: float = 2.0        # throttle back up below t_hot - deadband
    dtm_step: float = 0.025          # frequency-factor step per thermal step
    dtm_f_min: float = 0.1           # throttle floor

    def validate(self) -> None:
        for name in ("alpha", "beta", "gamma", "p_idle", "p_per_flit", "p_core",
                     "jitter_std"):
            if getattr(self, name) < 0:
                raise ConfigError(f"thermal.{name} must be >= 0")
        if self.beta + 6 * self.gamma >= 1.0:
            raise ConfigError("thermal.beta + 6*thermal.gamma must be < 1 (update stability)")
        if self.step_cycles < 1:
            raise ConfigError("thermal.step_cycles must be >= 1")
        if self.jitter_corr_steps <= 0:
            raise ConfigError("thermal.jitter_corr_steps must be > 0")
        if not 0.0 < self.dtm_f_min <= 1.0:
            raise ConfigError("thermal.dtm_f_min must be in (0, 1]")
        if self.dtm_step <= 0 or self.dtm_deadband < 0:
            raise ConfigError("thermal.dtm_step must be > 0 and dtm_deadband >= 0")


@dataclass
class TrojanConfig:
    count: int = 8
    delta: float = 2.0               # deg C reporting offset while active
    credit_cycles: int = 1500        # nominal credit-phase length; budget = delta * credit_cycles
    behaviors: str = "alternate"     # alternate | b1 | b2
    start_clamp: float = 0.8         # starts clamped to [0, start_clamp * sim_cycles]

    def validate(self) -> None:
        if self.count < 0:
            raise ConfigError("trojan.count must be >= 0")
        if self.delta <= 0:
            raise ConfigError("trojan.delta must be > 0")
        if self.credit_cycles < 1:
            raise ConfigError("trojan.credit_cycles must be >= 1")
        if self.behaviors not in ("alternate", "b1", "b2"):
            raise ConfigError("trojan.behaviors must be alternate, b1 or b2")


@dataclass
class DetectorConfig:
    feature_set: int = 2             # 1..5
    sigma_index: int = 5             # 1..7
    t1: float = 56.5                 # weight threshold T1 (deg C band units)
    t2: float = 75.0                 # weight threshold T2
    window: int = 8                  # features-log depth (>= 2 for the 2-cycle average)
    warmup: int = 32                 # cycles before any classification

    def validate(self) -> None:
        if self.feature_set not in (1, 2, 3, 4, 5):
            raise ConfigError("detector.feature_set must be 1..5")
        if not 1 <= self.sigma_index <= 7:
            raise ConfigError("detector.sigma_index must be 1..7")
        if not self.t1 < self.t2:
            raise ConfigError("detector.t1 must be < detector.t2")
        if self.window < 2:
            raise ConfigError("detector.window must be >= 2")
        if self.warmup < 0:
            raise ConfigError("detector.warmup must be >= 0")


@dataclass
class ResponseConfig:
    enabled: bool = True
    hysteresis: int = 128            # calm cycles required before reopening (mode L1)
    # Deeper shutdowns demand proportionally longer calm before reopening.
    level_hold_scale: Tuple[float, float, float] = (1.0, 1.25, 1.5)

    def validate(self) -> None:
        if self.hysteresis < 1:
            raise ConfigError("response.hysteresis must be >= 1")
        if len(self.level_hold_scale) != 3 or any(s < 1.0 for s in self.level_hold_scale):
            raise ConfigError("response.level_hold_scale must be three scales >= 1.0")

    def hold_for_mode(self, mode: int) -> int:
        return int(round(self.hysteresis * self.level_hold_scale[mode - 1]))


@dataclass
class MetricsConfig:
    epoch_cycles: int = 1000         # fluctuation evaluation epoch

    def validate(self) -> None:
        if self.epoch_cycles < 2:
            raise ConfigError("metrics.epoch_cycles must be >= 2")


@dataclass
class DatasetConfig:
    enabled: bool = False

    def validate(self) -> None:
        pass


@dataclass
class SimConfig:
    dims: Tuple[int, int, int] = (4, 4, 4)
    buffer_depth: int = 4
    flits_per_packet: int = 8
    sim_cycles: int = 20000
    seed: int = 1
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    trojan: TrojanConfig = field(default_factory=TrojanConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    response: ResponseConfig = field(default_factory=ResponseConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)

    def validate(self) -> None:
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise ConfigError("dims must be three positive integers")
        if self.dims[0] * self.dims[1] * self.dims[2] > 256:
            raise ConfigError("dims product must not exceed 256 routers")
        if self.buffer_depth < 1:
            raise ConfigError("buffer_depth must be >= 1")
        if self.flits_per_packet < 1:
            raise ConfigError("flits_per_packet must be >= 1")
        if self.sim_cycles < 1:
            raise ConfigError("sim_cycles must be >= 1")
        for section in (self.traffic, self.thermal, self.trojan, self.detector,
                        self.response, self.metrics, self.dataset):
            section.validate()

    def copy(self) -> "SimConfig":
        return dataclasses.replace(
            self,
            traffic=dataclasses.replace(self.traffic),
            thermal=dataclasses.replace(self.thermal),
            trojan=dataclasses.replace(self.trojan),
            detector=dataclasses.replace(self.detector),
            response=dataclasses.replace(self.response),
            metrics=dataclasses.replace(self.metrics),
            dataset=dataclasses.replace(self.dataset),
        )


_SECTIONS = {
    "traffic": TrafficConfig,
    "thermal": ThermalConfig,
    "trojan": TrojanConfig,
    "detector": DetectorConfig,
    "response": ResponseConfig,
    "metrics": MetricsConfig,
    "dataset": DatasetConfig,
}

# Historical flat aliases accepted at top level.
_TOP_ALIASES = {"pir": ("traffic", "pir")}


def _apply_section(obj, section: str, data: dict) -> None:
    fields = {f.name for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key: {section}.{key}")
        if key == "level_hold_scale":
            value = tuple(value)
        setattr(obj, key, value)


def config_from_dict(data: dict, base: Optional[SimConfig] = None) -> SimConfig:
    cfg = base.copy() if base is not None else SimConfig()
    top_fields = {f.name for f in dataclasses.fields(SimConfig)}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"config section '{key}' must be an object")
            _apply_section(getattr(cfg, key), key, value)
        elif key in _TOP_ALIASES:
            section, name = _TOP_ALIASES[key]
            setattr(getattr(cfg, section), name, value)
        elif key in top_fields:
            if key == "dims":
                value = tuple(value)
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key: {key}")
    cfg.validate()
    return cfg


def load_config(path: str | Path, base: Optional[SimConfig] = None) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return config_from_dict(data, base)


def config_to_dict(cfg: SimConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["dims"] = list(cfg.dims)
    out["response"]["level_hold_scale"] = list(cfg.response.level_hold_scale)
    return out
