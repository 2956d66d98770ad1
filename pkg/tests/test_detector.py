import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermoc.config import DetectorConfig
from thermoc.detector import (ALL_MONITORED, FEATURE_SETS, FeaturesLog,
                              NEVER_OUT, RouterDetector, WmaState, classify,
                              coverage, default_scalers, derive_feature,
                              first_out_tier, multiclass_predict, sigma_shift,
                              status_of, thresholds_approx, thresholds_exact,
                              two_cycle_average, wma_update)
from thermoc.errors import ContractViolation
from thermoc.fixedpoint import RAW_MAX, to_raw


def _state(wma, t1=60.0, t2=75.0):
    return WmaState(wma=to_raw(wma), t1=to_raw(t1), t2=to_raw(t2))


class TestWmaUpdate:
    def test_fixed_point_of_equal_sample(self):
        state = _state(55.0)
        assert wma_update(state, to_raw(55.0)).wma == to_raw(55.0)

    def test_heavier_weight_on_hot_sample(self):
        # x=70 weighs 3 (>= t1), previous average 50 weighs 1.
        state = _state(50.0)
        out = wma_update(state, to_raw(70.0))
        assert out.wma == to_raw((3 * 70.0 + 50.0) / 4)  # 65.0

    def test_heavier_weight_on_hot_average(self):
        state = _state(70.0)
        out = wma_update(state, to_raw(50.0))
        assert out.wma == to_raw((50.0 + 3 * 70.0) / 4)  # 65.0

    def test_boundary_sample_weighs_three(self):
        # Samples at exactly t1 fall in the heavy band.
        state = _state(50.0)
        out = wma_update(state, to_raw(60.0))
        assert out.wma == to_raw((3 * 60.0 + 50.0) / 4)

    @given(st.integers(0, RAW_MAX), st.integers(0, RAW_MAX))
    @settings(max_examples=300, deadline=None)
    def test_result_is_convex_combination(self, wma_raw, x_raw):
        state = WmaState(wma=wma_raw, t1=to_raw(60.0), t2=to_raw(75.0))
        out = wma_update(state, x_raw)
        lo, hi = min(wma_raw, x_raw), max(wma_raw, x_raw)
        # Rounding to the grid may sit half an LSB outside the hull.
        assert lo - 1 <= out.wma <= hi + 1


class TestSigmaShift:
    def test_zero_mean(self):
        for n in range(1, 8):
            assert sigma_shift(0, n) == 0

    def test_examples(self):
        assert sigma_shift(to_raw(64.0), 5) == 512    # 16384 >> 5
        assert sigma_shift(to_raw(64.0), 7) == 128

    def test_rejects_bad_tier(self):
        with pytest.raises(ContractViolation):
            sigma_shift(100, 0)
        with pytest.raises(ContractViolation):
            sigma_shift(100, 8)
        with pytest.raises(ContractViolation):
            sigma_shift(-1, 3)

    def test_matches_floor_division_sampled(self):
        for raw in range(0, RAW_MAX + 1, 97):
            for n in range(1, 8):
                assert sigma_shift(raw, n) == raw // (2 ** n)


class TestThresholds:
    def test_examples(self):
        assert thresholds_approx(to_raw(64.0), 5) == (to_raw(62.0), to_raw(66.0))
        assert thresholds_approx(to_raw(64.0), 1) == (to_raw(32.0), to_raw(96.0))
        assert thresholds_approx(0, 3) == (0, 0)

    def test_symmetry_pre_saturation(self):
        for raw in range(256, 23000, 311):
            for n in range(1, 8):
                lo, hi = thresholds_approx(raw, n)
                assert lo + hi == 2 * raw

    def test_saturation(self):
        lo, hi = thresholds_approx(RAW_MAX, 1)
        assert hi == RAW_MAX

    def test_exact_reference(self):
        lo, hi = thresholds_exact([1, 2, 3, 4, 5], 1.0)
        assert lo == pytest.approx(3 - 2 ** 0.5)
        assert hi == pytest.approx(3 + 2 ** 0.5)

    def test_exact_degenerate(self):
        assert thresholds_exact([4.0, 4.0, 4.0], 2.5) == (4.0, 4.0)
        mean = sum([1, 2, 3]) / 3
        assert thresholds_exact([1, 2, 3], 0.0) == (mean, mean)

    def test_exact_rejects_empty(self):
        with pytest.raises(ContractViolation):
            thresholds_exact([], 1.0)


class TestDeriveFeature:
    def test_two_cycle_average(self):
        log = FeaturesLog(window=4)
        log.append(to_raw(60.0))
        log.append(to_raw(62.0))
        assert derive_feature("F17", log) == to_raw(61.0)

    def test_two_cycle_average_constant(self):
        log = FeaturesLog(window=4)
        log.append(to_raw(57.0))
        log.append(to_raw(57.0))
        assert derive_feature("F17", log) == to_raw(57.0)

    def test_warmup_signal(self):
        log = FeaturesLog(window=4)
        assert derive_feature("F16", log) is None
        log.append(to_raw(60.0))
        assert derive_feature("F17", log) is None
        assert derive_feature("F16", log) == to_raw(60.0)

    def test_f18_is_wma_state(self):
        state = _state(50.0)
        for x in (52.0, 55.0, 58.0):
            state = wma_update(state, to_raw(x))
        log = FeaturesLog(window=4)
        assert derive_feature("F18", log, state) == state.wma

    def test_window_capacity(self):
        log = FeaturesLog(window=2)
        for v in range(10):
            log.append(v)
        assert len(log) == 2
        assert log.last() == 9 and log.previous() == 8
        with pytest.raises(ContractViolation):
            FeaturesLog(window=1)


class TestClassify:
    def test_all_normal(self):
        regs = [(10, 20)] * 3
        out = classify([15, 10, 20], regs)   # boundaries inclusive
        assert out.level == 0
        assert out.statuses == ("N", "N", "N")

    def test_single_upper(self):
        regs = [(10, 20)] * 3
        out = classify([25, 15, 15], regs)
        assert out.level == 1
        assert out.statuses[0] == "U"

    def test_all_outside(self):
        regs = [(10, 20)] * 3
        out = classify([25, 5, 100], regs)
        assert out.level == 3
        assert out.statuses == ("U", "L", "U")

    def test_level_permutation_invariant(self):
        regs = [(10, 20)] * 3
        values = [25, 5, 15]
        base = classify(values, regs).level
        for perm in ([5, 15, 25], [15, 25, 5]):
            assert classify(perm, regs).level == base


class TestMulticlass:
    def test_level_zero(self):
        assert multiclass_predict(0, "N") == 0

    def test_direction(self):
        assert multiclass_predict(2, "L") == 1
        assert multiclass_predict(1, "U") == 2

    def test_sticky_direction(self):
        assert multiclass_predict(1, "N", "U") == 2
        assert multiclass_predict(1, "N", "L") == 1

    def test_no_history_default(self):
        assert multiclass_predict(1, "N", None) == 2


class TestCoverage:
    def test_full_range(self):
        assert coverage([1, 2, 3], (0, 10)) == 100.0

    def test_example(self):
        assert coverage([1, 2, 3, 4, 5], (2, 4)) == 60.0

    def test_rejects_empty(self):
        with pytest.raises(ContractViolation):
            coverage([], (0, 1))

    def test_monotone_in_tier(self):
        rng = np.random.default_rng(7)
        samples = rng.normal(to_raw(57.0), 200, size=4000).astype(int)
        mean = int(np.rint(samples.mean()))
        values = [coverage(samples, thresholds_approx(mean, n))
                  for n in range(1, 8)]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestFirstOutTier:
    def test_matches_threshold_comparison(self):
        rng = np.random.default_rng(3)
        for _ in range(3000):
            wma = int(rng.integers(1, RAW_MAX))
            value = int(rng.integers(0, RAW_MAX))
            tier = first_out_tier(wma, value - wma)
            for n in range(1, 8):
                lo, hi = thresholds_approx(wma, n)
                outside = status_of(value, lo, hi) != "N"
                assert outside == (tier <= n), (wma, value, n, tier)

    def test_zero_deviation_never_out(self):
        assert first_out_tier(10000, 0) == NEVER_OUT


class TestRouterDetector:
    def _make(self, bank=False, set_id=2):
        cfg = DetectorConfig(feature_set=set_id, sigma_index=5, warmup=4)
        scalers = default_scalers(64, 10000, 9)
        return RouterDetector(cfg, scalers, bank=bank)

    def test_specialized_path_matches_generic(self):
        generic = self._make()
        fast = self._make()
        rng = np.random.default_rng(11)
        base = to_raw(57.0)
        for cycle in range(600):
            x = base + int(rng.integers(-600, 600))
            level_g, _, cls_g, _ = generic.evaluate(x, None, 0.0, cycle)
            level_f, cls_f = fast.evaluate_set2(x)
            assert (level_g, cls_g) == (level_f, cls_f), cycle
        for fid in ("F16", "F17", "F18"):
            assert generic.monitors[fid].wma == fast.monitors[fid].wma

    def test_warmup_silence(self):
        det = self._make()
        for cycle in range(4):
            level, _, cls, _ = det.evaluate(to_raw(80.0 if cycle else 40.0),
                                            None, 0.0, cycle)
            assert level == 0 and cls == 0

    def test_step_detection_direction(self):
        det = self._make()
        x = to_raw(57.0)
        for cycle in range(50):
            det.evaluate(x, None, 0.0, cycle)
        level, dirs, cls, _ = det.evaluate(x - to_raw(3.0), None, 0.0, 51)
        assert level >= 1
        assert cls == 1          # under-reporting direction
        det2 = self._make()
        for cycle in range(50):
            det2.evaluate(x, None, 0.0, cycle)
        level2, _, cls2, _ = det2.evaluate(x + to_raw(3.0), None, 0.0, 51)
        assert level2 >= 1 and cls2 == 2

    def test_bank_rows_cover_all_features(self):
        det = self._make(bank=True)
        out = det.evaluate(to_raw(57.0), {"F6": 3.0, "F7": 9.0, "F10": 2.0,
                                          "F8": 5.0}, 1.5, 0)
        bank_row = out[3]
        assert len(bank_row) == len(ALL_MONITORED)

    def test_feature_sets_fixed(self):
        assert FEATURE_SETS[1] == ("F15", "F17", "F16")
        assert FEATURE_SETS[2] == ("F17", "F16", "F18")
        assert FEATURE_SETS[3] == ("F17", "F18", "F1")
        assert FEATURE_SETS[4] == ("F18", "F7", "F10")
        assert FEATURE_SETS[5] == ("F16", "F8", "F6")

    def test_two_cycle_average_rounding(self):
        assert two_cycle_average(3, 4) == 4   # ties up
        assert two_cycle_average(4, 4) == 4
