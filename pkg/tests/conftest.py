"""Shared fixtures and tiny builders for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from fairssl_lab.data import SynthConfig, synth_generate
from fairssl_lab.nnet.losses import LossBatch
from fairssl_lab.nnet.mlp import mlp_init


def small_synth(seed=0, n=400, d=5, n_groups=2, n_labels=2, shift=1.0):
    cfg = SynthConfig(n=n, d=d, n_groups=n_groups, n_labels=n_labels,
                      group_mean_shift=shift,
                      label_prevalence=[[0.3, 0.6], [0.7, 0.4]][:n_groups]
                      if (n_groups, n_labels) == (2, 2) else
                      [[0.5] * n_labels for _ in range(n_groups)])
    return synth_generate(cfg, seed=seed)


def random_batch(rng, n_lab=12, n_unlab=24, d=5, L=2, n_groups=2):
    x_lab = rng.standard_normal((n_lab, d))
    y_lab = (rng.random((n_lab, L)) < 0.5).astype(np.float64)
    x_weak = rng.standard_normal((n_unlab, d))
    x_strong = x_weak + 0.1 * rng.standard_normal((n_unlab, d))
    groups = rng.integers(0, n_groups, n_unlab)
    return LossBatch(x_lab=x_lab, y_lab=y_lab, x_weak=x_weak, x_strong=x_strong,
                     groups=groups, n_groups=n_groups)


def small_mlp(rng_seed=0, d=5, hidden=(8,), L=2):
    # Random head: gradient and gate tests need confident entries,
    # which the zero-head default deliberately avoids.
    return mlp_init((d, *hidden, L), seed=rng_seed, head="he")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
