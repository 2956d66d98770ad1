"""Per-tile lumped-RC thermal proxy.

Each router tile carries one temperature state in Q8.8. A thermal step
(every ``step_cycles`` simulation cycles) applies an explicit first-order
update: activity-driven heating, leakage toward ambient, and pairwise
lateral diffusion between neighboring tiles.

Diffusion is computed once per lattice edge and applied antisymmetrically,
so with alpha = beta = 0 the sum of all tile temperatures is conserved
exactly in raw integer units.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .config import ThermalConfig
from .fixedpoint import ONE, to_raw
from .mesh import Mesh

TEMP_RAW_MAX = 99 * ONE        # tiles clamp to [0, 99] deg C
SENSOR_RAW_MAX = 90 * ONE      # sensors saturate at 90 deg C
POWER_MAX = 3.0                # watts


def tile_power(activity: int, cfg: ThermalConfig) -> float:
    """Activity power for one tile: idle floor plus per-flit cost, clamped.

    ``activity`` is the number of flits the router switched this thermal step.
    """
    power = cfg.p_idle + cfg.p_per_flit * activity
    if power < 0.0:
        return 0.0
    if power > POWER_MAX:
        return POWER_MAX
    return power


class ThermalGrid:
    """Tile temperatures (Q8.8 raw) and the per-step power inputs."""

    def __init__(self, mesh: Mesh, cfg: ThermalConfig):
        self.mesh = mesh
        self.cfg = cfg
        # Start at the idle-load equilibrium so runs do not open with a long
        # warm-up ramp from ambient.
        idle_eq = cfg.t_ambient + (cfg.alpha * cfg.p_idle / cfg.beta if cfg.beta > 0 else 0.0)
        idle_eq = min(idle_eq, 99.0)
        self.temps = np.full(mesh.n, to_raw(idle_eq), dtype=np.int64)
        self.powers = np.full(mesh.n, cfg.p_idle, dtype=np.float64)
        # Unique lattice edges (i < j) for pairwise diffusion.
        src, dst = [], []
        for rid in range(mesh.n):
            for nbr in mesh.neighbor[rid]:
                if nbr > rid:
                    src.append(rid)
                    dst.append(nbr)
        self._edge_i = np.asarray(src, dtype=np.intp)
        self._edge_j = np.asarray(dst, dtype=np.intp)
        self._amb_raw = to_raw(cfg.t_ambient)

    def step(self) -> None:
        """One explicit thermal update over all tiles."""
        cfg = self.cfg
        temps = self.temps
        heat = np.rint(cfg.alpha * self.powers * ONE).astype(np.int64)
        leak = np.rint(cfg.beta * (temps - self._amb_raw)).astype(np.int64)
        delta = heat - leak
        if cfg.gamma > 0.0 and len(self._edge_i):
            flow = np.rint(cfg.gamma * (temps[self._edge_j] - temps[self._edge_i]))
            flow = flow.astype(np.int64)
            np.add.at(delta, self._edge_i, flow)
            np.subtract.at(delta, self._edge_j, flow)
        np.clip(temps + delta, 0, TEMP_RAW_MAX, out=temps)


def step_thermal(grid: ThermalGrid, cfg: ThermalConfig | None = None) -> ThermalGrid:
    """Functional wrapper around ThermalGrid.step (cfg defaults to the grid's)."""
    if cfg is not None and cfg is not grid.cfg:
        grid.cfg = cfg
    grid.step()
    return grid


class PowerJitter:
    """Stationary AR(1) power jitter per tile, seeded and vectorized.

    Models ambient/process fluctuation so sensor streams wander on a slow
    time scale; the thermal update itself stays deterministic given the
    jitter stream.
    """

    def __init__(self, n: int, cfg: ThermalConfig, rng: np.random.Generator):
        self.rng = rng
        self.rho = float(np.exp(-1.0 / cfg.jitter_corr_steps))
        self.innov_std = cfg.jitter_std * np.sqrt(1.0 - self.rho ** 2)
        if cfg.jitter_std > 0:
            self.state = rng.normal(0.0, cfg.jitter_std, size=n)
        else:
            self.state = np.zeros(n)

    def step(self) -> np.ndarray:
        if self.innov_std > 0:
            self.state = self.rho * self.state + self.rng.normal(
                0.0, self.innov_std, size=len(self.state))
        return self.state
