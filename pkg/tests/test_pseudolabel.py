"""Augmentations, the confidence gate, the masked consistency loss and the
gate health signals."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairssl_lab.pseudolabel import (GateConfigError, GateMask, augment_strong,
                                     augment_weak, confidence_gate,
                                     health_signals, unsup_loss,
                                     unsup_loss_grad)

LN2 = float(np.log(2.0))


class TestAugment:
    def test_weak_touches_only_continuous_columns(self, rng):
        x = rng.standard_normal((40, 4))
        cont = np.array([True, False, True, False])
        out = augment_weak(x, np.random.default_rng(0), 0.3, cont)
        assert np.array_equal(out[:, 1], x[:, 1])
        assert np.array_equal(out[:, 3], x[:, 3])
        assert not np.array_equal(out[:, 0], x[:, 0])
        assert out is not x

    def test_weak_sigma_zero_is_identity(self, rng):
        x = rng.standard_normal((10, 3))
        out = augment_weak(x, np.random.default_rng(0), 0.0, np.ones(3, bool))
        assert np.array_equal(out, x)

    def test_weak_rejects_negative_sigma(self, rng):
        with pytest.raises(GateConfigError):
            augment_weak(np.zeros((2, 2)), rng, -0.1, np.ones(2, bool))

    def test_strong_drop_fraction(self):
        x = np.ones((500, 20))
        out = augment_strong(x, np.random.default_rng(3), 0.0, 0.25,
                             np.zeros(20, bool))
        frac = float((out == 0.0).mean())
        assert abs(frac - 0.25) < 0.02

    def test_strong_rejects_bad_p_drop(self, rng):
        with pytest.raises(GateConfigError):
            augment_strong(np.zeros((2, 2)), rng, 0.1, 1.0, np.ones(2, bool))


class TestGate:
    @pytest.mark.parametrize("tau", [0.5, 1.0, 0.4, 1.5])
    def test_tau_validation(self, tau):
        with pytest.raises(GateConfigError):
            confidence_gate(np.array([[0.9]]), tau)

    def test_confident_positive_passes(self):
        gate = confidence_gate(np.array([[0.97]]), 0.95)
        assert gate.mask[0, 0] == 1.0 and gate.pseudo[0, 0] == 1.0

    def test_confident_negative_passes_with_zero_label(self):
        gate = confidence_gate(np.array([[0.04]]), 0.95)
        assert gate.mask[0, 0] == 1.0 and gate.pseudo[0, 0] == 0.0

    def test_uncertain_batch_gates_nothing(self):
        gate = confidence_gate(np.full((8, 3), 0.5), 0.95)
        assert gate.pass_ratio == 0.0 and gate.n_gated == 0

    def test_boundary_confidence_passes(self):
        gate = confidence_gate(np.array([[0.95, 0.9499]]), 0.95)
        assert gate.mask.tolist() == [[1.0, 0.0]]

    def test_pass_ratio_is_mask_mean(self, rng):
        probs = rng.random((30, 4))
        gate = confidence_gate(probs, 0.8)
        assert gate.pass_ratio == pytest.approx(gate.mask.mean())


class TestUnsupLoss:
    def test_single_gated_entry_is_log_two(self):
        logits = np.array([[0.0]])
        pseudo = np.array([[1.0]])
        mask = np.array([[1.0]])
        assert unsup_loss(logits, pseudo, mask) == pytest.approx(LN2, rel=1e-12)

    def test_hand_bce(self):
        logits = np.array([[2.0, -1.0]])
        pseudo = np.array([[1.0, 0.0]])
        mask = np.ones((1, 2))
        want = (np.log1p(np.exp(-2.0)) + np.log1p(np.exp(-1.0))) / 2.0
        assert unsup_loss(logits, pseudo, mask) == pytest.approx(want, rel=1e-12)

    def test_empty_mask_is_exact_zero(self):
        logits = np.array([[3.0, -3.0]])
        value, grad = unsup_loss_grad(logits, np.zeros((1, 2)), np.zeros((1, 2)))
        assert value == 0.0
        assert np.array_equal(grad, np.zeros((1, 2)))

    def test_grad_matches_finite_differences(self, rng):
        logits = rng.standard_normal((6, 3))
        pseudo = (rng.random((6, 3)) < 0.5).astype(float)
        mask = (rng.random((6, 3)) < 0.6).astype(float)
        value, grad = unsup_loss_grad(logits, pseudo, mask)
        eps = 1e-6
        fd = np.zeros_like(logits)
        for idx in np.ndindex(*logits.shape):
            up = logits.copy(); up[idx] += eps
            dn = logits.copy(); dn[idx] -= eps
            fd[idx] = (unsup_loss(up, pseudo, mask)
                       - unsup_loss(dn, pseudo, mask)) / (2 * eps)
        np.testing.assert_allclose(grad, fd, atol=1e-9)

    def test_ignores_non_gated_entries(self, rng):
        pseudo = (rng.random((5, 2)) < 0.5).astype(float)
        mask = np.zeros((5, 2)); mask[0, 0] = 1.0; mask[3, 1] = 1.0
        a = rng.standard_normal((5, 2))
        b = a.copy()
        b[mask == 0.0] = 99.0
        assert unsup_loss(a, pseudo, mask) == unsup_loss(b, pseudo, mask)


class TestHealthSignals:
    def test_ess_from_confidence_weights(self):
        # confidences (1, 1, 0.5) -> (2.5)^2 / 2.25
        probs_weak = np.array([[1.0, 0.0, 0.5]])
        gate = GateMask(mask=np.ones((1, 3)), pseudo=(probs_weak >= 0.5).astype(float),
                        pass_ratio=1.0)
        sig = health_signals(gate, probs_weak, probs_weak)
        assert sig.ess == pytest.approx(2.5 ** 2 / 2.25, rel=1e-12)
        assert not sig.p_degenerate

    def test_empty_gate_floors(self):
        gate = confidence_gate(np.full((4, 2), 0.5), 0.95)
        sig = health_signals(gate, np.full((4, 2), 0.5), np.full((4, 2), 0.5))
        assert sig.q == 0.0
        assert sig.p == 1.0 and sig.p_degenerate
        assert sig.ess == 1.0

    def test_agreement_counts_gated_entries_only(self):
        probs_weak = np.array([[0.99, 0.98, 0.55]])
        gate = confidence_gate(probs_weak, 0.95)
        # strong view agrees on the first entry, disagrees on the second,
        # and the third entry is outside the gate
        probs_strong = np.array([[0.8, 0.2, 0.1]])
        sig = health_signals(gate, probs_weak, probs_strong)
        assert sig.p == pytest.approx(0.5)
        assert sig.q == pytest.approx(2.0 / 3.0)

    def test_equal_confidences_reach_the_ess_ceiling(self):
        probs_weak = np.full((1, 4), 0.97)
        gate = confidence_gate(probs_weak, 0.95)
        sig = health_signals(gate, probs_weak, probs_weak)
        assert sig.ess == pytest.approx(4.0, rel=1e-12)


probs_arrays = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.floats(0.0, 1.0, width=64), min_size=2 * n,
                       max_size=2 * n).map(lambda v: np.array(v).reshape(n, 2)))


@settings(max_examples=60, deadline=None)
@given(probs=probs_arrays, tau=st.floats(0.55, 0.99))
def test_gate_properties(probs, tau):
    gate = confidence_gate(probs, tau)
    assert 0.0 <= gate.pass_ratio <= 1.0
    sig = health_signals(gate, probs, probs)
    assert 0.0 <= sig.q <= 1.0
    if gate.n_gated:
        assert 1.0 - 1e-9 <= sig.ess <= gate.n_gated + 1e-9
        assert sig.p == 1.0  # identical views always agree where gated
    else:
        assert sig.p_degenerate


@settings(max_examples=40, deadline=None)
@given(probs=probs_arrays, tau_lo=st.floats(0.55, 0.95), bump=st.floats(0.0, 0.04))
def test_raising_tau_never_passes_more(probs, tau_lo, bump):
    q_lo = confidence_gate(probs, tau_lo).pass_ratio
    q_hi = confidence_gate(probs, tau_lo + bump).pass_ratio
    assert q_hi <= q_lo
