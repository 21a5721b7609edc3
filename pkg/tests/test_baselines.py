"""Single-signal dual-weight schedules and their warmup calibration."""
import math

import numpy as np
import pytest

from fairssl_lab.baselines import (LAMBDA_CAP, CalibrationError, baseline_init,
                                   baseline_step, calibrate, calibrate_vtgt,
                                   dualasc_step, emap_step, pi_step, static_step)


class TestCalibration:
    def test_half_the_median(self):
        assert calibrate_vtgt([0.4, 0.4, 0.4], 0.5) == pytest.approx(0.2)
        assert calibrate_vtgt([0.1, 0.2, 0.9], 0.5) == pytest.approx(0.1)

    def test_other_fractions(self):
        vals = [0.4] * 5
        for f in (0.1, 0.25, 0.75, 1.0):
            assert calibrate_vtgt(vals, f) == pytest.approx(0.4 * f)

    def test_empty_history_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate_vtgt([], 0.5)

    def test_static_needs_no_target(self):
        state = baseline_init("static", lam_fixed=7.0)
        assert state.calibrated
        calibrate(state, [0.4])
        assert state.v_tgt is None

    def test_adaptive_kinds_require_target(self):
        for kind in ("emap", "pi", "dualasc"):
            state = baseline_init(kind)
            assert not state.calibrated
            with pytest.raises(CalibrationError, match=kind):
                baseline_step(state, 0.3)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown"):
            baseline_init("bangbang")


class TestStatic:
    def test_weight_never_moves(self):
        state = baseline_init("static", lam_fixed=10.0)
        for v in (0.0, 0.5, 3.0):
            assert static_step(state, v) == 10.0

    def test_ema_still_tracks(self):
        state = baseline_init("static", lam_fixed=1.0)
        static_step(state, 1.0)
        static_step(state, 0.0)
        assert state.vbar == pytest.approx(0.9, abs=1e-15)


class TestEmap:
    def _calibrated(self, lam=1.0, v_tgt=0.2):
        state = baseline_init("emap", lam_warm=lam)
        state.v_tgt = v_tgt
        return state

    def test_at_target_is_a_fixed_point(self):
        state = self._calibrated()
        state.vbar = 0.2  # pre-seeded so the EMA stays on target
        assert emap_step(state, 0.2) == pytest.approx(1.0, rel=1e-12)

    def test_double_violation_multiplies_by_e_tenth(self):
        state = self._calibrated()
        state.vbar = 0.4 / 0.9  # EMA lands exactly on 2 * v_tgt
        lam = emap_step(state, 0.0)
        assert state.vbar == pytest.approx(0.4)
        assert lam == pytest.approx(math.exp(0.1), rel=1e-10)

    def test_cap(self):
        state = self._calibrated(lam=1.0, v_tgt=1e-6)
        for _ in range(400):
            emap_step(state, 5.0)
        assert state.lam == LAMBDA_CAP

    def test_warmup_weight_held_as_start(self):
        state = baseline_init("emap", lam_warm=1.0)
        assert state.lam == 1.0 and state.lam0 == 1.0


class TestPi:
    def _calibrated(self, v_tgt=0.2):
        state = baseline_init("pi")
        state.v_tgt = v_tgt
        return state

    def test_zero_error_returns_setpoint_origin(self):
        state = self._calibrated()
        state.vbar = 0.2
        assert pi_step(state, 0.2) == pytest.approx(1.0)

    def test_hand_step(self):
        state = self._calibrated()
        state.vbar = 0.7 / 0.9  # EMA hits 0.7, error 0.5
        lam = pi_step(state, 0.0)
        assert state.integral == pytest.approx(0.5)
        assert lam == pytest.approx(1.0 + 1.0 * 0.5 + 0.1 * 0.5)

    def test_integral_winds_up_to_cap(self):
        state = self._calibrated(v_tgt=1e-4)
        for _ in range(1100):
            pi_step(state, 1e4)
        assert state.lam == LAMBDA_CAP

    def test_rectified_at_zero(self):
        state = self._calibrated(v_tgt=0.5)
        state.integral = -100.0
        assert pi_step(state, 0.0) == 0.0


class TestDualAscent:
    def _calibrated(self, lam=1.0, v_tgt=0.0):
        state = baseline_init("dualasc", lam_warm=lam)
        state.v_tgt = v_tgt
        return state

    def test_hand_step(self):
        state = self._calibrated(lam=1.0)
        state.vbar = 0.5 / 0.9  # EMA lands on 0.5 after this step
        lam = dualasc_step(state, 0.0)
        assert lam == pytest.approx(1.0 + 0.1 * 0.5)

    def test_rectifier_reaches_zero(self):
        state = self._calibrated(lam=0.02, v_tgt=1.0)
        state.vbar = 0.0
        for _ in range(5):
            dualasc_step(state, 0.0)
        assert state.lam == 0.0

    def test_at_target_fixed_point(self):
        state = self._calibrated(lam=2.0, v_tgt=0.3)
        state.vbar = 0.3
        assert dualasc_step(state, 0.3) == pytest.approx(2.0)


def test_dispatch_and_nonnegativity(rng):
    for kind in ("static", "emap", "pi", "dualasc"):
        state = baseline_init(kind, lam_fixed=0.5)
        calibrate(state, [0.3, 0.5, 0.4])
        for _ in range(50):
            lam = baseline_step(state, float(rng.uniform(0.0, 2.0)))
            assert 0.0 <= lam <= LAMBDA_CAP


def test_calibrate_respects_fraction(rng):
    state = baseline_init("pi")
    calibrate(state, [0.2, 0.6, 0.4], fraction=0.25)
    assert state.v_tgt == pytest.approx(0.1)
