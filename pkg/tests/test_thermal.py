import numpy as np
import pytest

from thermoc.config import ThermalConfig
from thermoc.errors import ConfigError
from thermoc.fixedpoint import ONE, to_raw
from thermoc.mesh import Mesh
from thermoc.thermal import (PowerJitter, SENSOR_RAW_MAX, TEMP_RAW_MAX,
                             ThermalGrid, step_thermal, tile_power)


def _cfg(**kw):
    base = dict(t_ambient=45.0, alpha=2.0, beta=0.05, gamma=0.01,
                p_idle=0.3, p_per_flit=0.01, jitter_std=0.0, dtm_enabled=False)
    base.update(kw)
    return ThermalConfig(**base)


class TestTilePower:
    def test_idle(self):
        assert tile_power(0, _cfg()) == 0.3

    def test_linear_in_activity(self):
        assert tile_power(20, _cfg()) == pytest.approx(0.5)

    def test_clamps_at_three_watts(self):
        assert tile_power(10 ** 6, _cfg()) == 3.0


class TestStepThermal:
    def test_ambient_zero_power_is_fixed_point(self):
        cfg = _cfg(p_idle=0.0)
        grid = ThermalGrid(Mesh((3, 3, 1)), cfg)
        grid.temps[:] = to_raw(45.0)
        grid.powers[:] = 0.0
        before = grid.temps.copy()
        step_thermal(grid)
        assert np.array_equal(grid.temps, before)

    def test_uniform_field_has_no_diffusion(self):
        cfg = _cfg(gamma=0.2 / 6)
        grid = ThermalGrid(Mesh((3, 3, 1)), cfg)
        grid.temps[:] = to_raw(60.0)
        grid.powers[:] = 0.5
        step_thermal(grid)
        expected = to_raw(60.0) + round(2.0 * 0.5 * ONE) - round(0.05 * (to_raw(60.0) - to_raw(45.0)))
        assert np.all(grid.temps == expected)

    def test_hot_tile_diffusion_hand_example(self):
        # Single 80 C tile among 45 C neighbors, alpha=beta=0, gamma=0.05,
        # four neighbors: hot tile drops 7.0 C, each neighbor gains 1.75 C.
        cfg = _cfg(alpha=0.0, beta=0.0, gamma=0.05, p_idle=0.0)
        mesh = Mesh((3, 3, 1))
        grid = ThermalGrid(mesh, cfg)
        grid.temps[:] = to_raw(45.0)
        center = mesh.id_of((1, 1, 0))
        grid.temps[center] = to_raw(80.0)
        grid.powers[:] = 0.0
        step_thermal(grid)
        assert grid.temps[center] == to_raw(73.0)
        for port in mesh.present_ports[center]:
            nbr = mesh.neighbor[center][port]
            assert grid.temps[nbr] == to_raw(46.75)

    def test_diffusion_conserves_total_heat(self):
        cfg = _cfg(alpha=0.0, beta=0.0, gamma=0.03, p_idle=0.0)
        mesh = Mesh((4, 4, 4))
        grid = ThermalGrid(mesh, cfg)
        rng = np.random.default_rng(5)
        grid.temps[:] = rng.integers(to_raw(40.0), to_raw(85.0), size=mesh.n)
        total = int(grid.temps.sum())
        grid.powers[:] = 0.0
        for _ in range(50):
            step_thermal(grid)
        assert int(grid.temps.sum()) == total

    def test_contraction_toward_ambient(self):
        cfg = _cfg(p_idle=0.0, gamma=0.01)
        mesh = Mesh((4, 4, 4))
        grid = ThermalGrid(mesh, cfg)
        rng = np.random.default_rng(9)
        grid.temps[:] = rng.integers(to_raw(20.0), to_raw(90.0), size=mesh.n)
        grid.powers[:] = 0.0
        amb = to_raw(45.0)
        last = int(np.abs(grid.temps - amb).max())
        for _ in range(100):
            step_thermal(grid)
            now = int(np.abs(grid.temps - amb).max())
            assert now <= last
            last = now

    def test_output_range_clamped(self):
        cfg = _cfg(alpha=3.0, beta=0.01, p_idle=3.0)
        grid = ThermalGrid(Mesh((2, 2, 1)), cfg)
        grid.powers[:] = 3.0
        for _ in range(2000):
            step_thermal(grid)
        assert np.all(grid.temps <= TEMP_RAW_MAX)
        assert np.all(grid.temps >= 0)
        assert SENSOR_RAW_MAX == 90 * ONE

    def test_stability_invariant_enforced(self):
        with pytest.raises(ConfigError):
            ThermalConfig(beta=0.5, gamma=0.1).validate()


class TestPowerJitter:
    def test_disabled_when_zero_std(self):
        jitter = PowerJitter(8, _cfg(jitter_std=0.0), np.random.default_rng(1))
        assert np.all(jitter.step() == 0.0)

    def test_stationary_std(self):
        cfg = _cfg(jitter_std=0.05, jitter_corr_steps=10.0)
        jitter = PowerJitter(4, cfg, np.random.default_rng(2))
        samples = np.array([jitter.step().copy() for _ in range(6000)])
        assert samples.std() == pytest.approx(0.05, rel=0.1)

    def test_deterministic(self):
        cfg = _cfg(jitter_std=0.02)
        a = PowerJitter(4, cfg, np.random.default_rng(3))
        b = PowerJitter(4, cfg, np.random.default_rng(3))
        for _ in range(10):
            assert np.array_equal(a.step(), b.step())
