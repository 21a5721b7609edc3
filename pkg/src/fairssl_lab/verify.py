"""Fast property checks: gate flatness, sign conflict, allocation, regret.

Each check returns a CheckResult; the CLI prints one line per check. The
acceptance tests call the same functions with their tolerances pinned.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .controller import (EpochSignals, OpdaConfig, allocate, bench_stationary_quadratic,
                         gain_cost, opda_init, opda_lite_step, opda_step)
from .fairness import entropy_penalty, simfair_penalty
from .nnet.finite_diff import fd_grad_of
from .nnet.losses import LossBatch, ObjectiveConfig, grad_of
from .nnet.mlp import mlp_init
from .numerics import logit
from .pseudolabel import confidence_gate


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float


def _result(name, t0, passed, detail) -> CheckResult:
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def constant_predictor(dims, c: float):
    """Zero weights, zero hidden biases, output bias logit(c): p(x) = c everywhere."""
    mlp = mlp_init(dims, seed=0)
    mlp.theta[:] = 0.0
    mlp.biases[-1][:] = logit(np.asarray(c, dtype=np.float64))
    return mlp


def check_gate_flatness(taus=(0.7, 0.95), n_points: int = 9, n: int = 64,
                        fd_tol: float = 1e-8, seed: int = 0) -> CheckResult:
    """Rejected-band constant predictors: unsup loss and gradient exactly zero."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    dims = (4, 8, 2)
    x_weak = rng.standard_normal((n, dims[0]))
    x_strong = x_weak + 0.1 * rng.standard_normal((n, dims[0]))
    worst_loss = 0.0
    worst_grad = 0.0
    worst_fd = 0.0
    for tau in taus:
        cfg = ObjectiveConfig(tau=tau)
        lo, hi = 1.0 - tau + 0.01, tau - 0.01
        for c in np.linspace(lo, hi, n_points):
            mlp = constant_predictor(dims, float(c))
            batch = LossBatch(x_lab=x_weak[:4], y_lab=np.zeros((4, dims[-1])),
                              x_weak=x_weak, x_strong=x_strong)
            ev = grad_of(mlp, batch, "unsup", cfg)
            worst_loss = max(worst_loss, abs(ev.loss))
            worst_grad = max(worst_grad, float(np.abs(ev.grad).max()))
            fd = fd_grad_of(mlp, batch, "unsup", cfg)
            worst_fd = max(worst_fd, float(np.abs(fd).max()))
    ok = worst_loss == 0.0 and worst_grad == 0.0 and worst_fd < fd_tol
    return _result("gate_flatness", t0, ok,
                   f"loss={worst_loss:.1e} grad={worst_grad:.1e} fd={worst_fd:.1e}")


def sign_conflict_fraction(seed: int = 0, n: int = 400, majority_frac: float = 0.8,
                           tau: float = 0.7, conf: float = 0.75):
    """Fraction of gated majority high-confidence entries where the fairness and
    entropy logit gradients point in opposite directions."""
    rng = np.random.default_rng(seed)
    n_major = int(round(n * majority_frac))
    groups = np.concatenate([np.zeros(n_major, dtype=np.int64),
                             np.ones(n - n_major, dtype=np.int64)])
    probs = np.empty((n, 1))
    probs[:n_major, 0] = rng.uniform(0.80, 0.97, n_major)
    probs[n_major:, 0] = rng.uniform(0.03, 0.25, n - n_major)
    gm = confidence_gate(probs, tau)
    chain = probs * (1.0 - probs)
    g_v = simfair_penalty(probs, groups, 2, mask=gm.mask).grad * chain
    g_h = entropy_penalty(probs).grad * chain
    region = (groups == 0) & (gm.mask[:, 0] > 0) & (probs[:, 0] >= conf)
    gv, gh = g_v[region, 0], g_h[region, 0]
    live = (gv != 0.0) & (gh != 0.0)
    opposite = np.sign(gv[live]) != np.sign(gh[live])
    frac = float(np.mean(opposite)) if live.any() else 0.0
    return frac, int(region.sum())


def check_sign_conflict(threshold: float = 0.9, seed: int = 0) -> CheckResult:
    t0 = time.perf_counter()
    frac, n_region = sign_conflict_fraction(seed=seed)
    return _result("sign_conflict", t0, frac > threshold and n_region > 0,
                   f"opposite on {100 * frac:.1f}% of {n_region} entries")


def check_allocation_grid(n_cases: int = 1000, step: float = 1e-4,
                          tol: float = 1e-3, seed: int = 7) -> CheckResult:
    """Closed-form split against a brute grid argmin of dv*(1-pi)^2 + dh*pi^2."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    cfg = OpdaConfig()
    taus = np.arange(0.0, 1.0 + step / 2, step)
    worst = 0.0
    for dv, dh in rng.uniform(0.0, 10.0, (n_cases, 2)):
        closed = dv / (dv + dh + cfg.eps_alloc)
        obj = dv * (1.0 - taus) ** 2 + dh * taus ** 2
        worst = max(worst, abs(closed - taus[int(np.argmin(obj))]))
        got, _, _ = allocate(dv, dh, ess=50.0, pibar=None, cfg=cfg)
        if got != closed:
            return _result("allocation_grid", t0, False,
                           f"allocate() disagrees with closed form at ({dv}, {dh})")
    return _result("allocation_grid", t0, worst <= tol,
                   f"max |closed - grid| = {worst:.2e} over {n_cases} cases")


def gain_cost_table(seed: int = 11, n_random: int = 42):
    """50 (dv, dr, m_v, m_r) cases including exact rectifier boundaries."""
    rng = np.random.default_rng(seed)
    cases = [
        (-0.5, 0.5, 0.5, 0.5),    # both boundaries exactly at zero
        (-0.5, 0.5, 0.2, 0.2),    # both strictly active
        (0.5, -0.5, 0.2, 0.2),    # both strictly clipped
        (0.0, 0.0, 0.0, 0.0),     # all-zero corner
        (-1.0, 0.0, 1.0, 0.0),    # gain boundary only
        (0.0, 1.0, 0.0, 1.0),     # cost boundary only
        (-3.0, 2.0, 0.1, 0.1),
        (1e-12, -1e-12, 0.0, 0.0),
    ]
    draws = rng.uniform(-2.0, 2.0, (n_random, 2))
    margins = rng.uniform(0.0, 1.0, (n_random, 2))
    cases += [(dv, dr, mv, mr) for (dv, dr), (mv, mr) in zip(draws, margins)]
    return cases


def check_gain_cost(tol: float = 1e-12, seed: int = 11) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    cases = gain_cost_table(seed=seed)
    for dv, dr, mv, mr in cases:
        g, c, s = gain_cost(dv, dr, mv, mr)
        g_ref = max(0.0, -dv - mv)
        c_ref = max(0.0, dr - mr)
        worst = max(worst, abs(g - g_ref), abs(c - c_ref), abs(s - (g_ref - c_ref)))
    return _result("gain_cost", t0, worst <= tol,
                   f"max abs err = {worst:.2e} over {len(cases)} cases")


def check_floor_replay(n_epochs: int = 40, seeds=(0, 1, 2),
                       tol: float = 1e-12) -> CheckResult:
    """Both controllers keep lambda_v, lambda_h at or above B * pi_min(ESS)."""
    t0 = time.perf_counter()
    cfg = OpdaConfig()
    violations = 0
    checked = 0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        for stepper in (opda_step, opda_lite_step):
            state = opda_init(cfg)
            for _ in range(n_epochs):
                sig = EpochSignals(
                    v=float(rng.uniform(0.0, 0.5)), r=float(rng.uniform(0.1, 0.6)),
                    q=float(rng.uniform(0.0, 1.0)), p=float(rng.uniform(0.5, 1.0)),
                    ess=float(rng.uniform(1.0, 200.0)),
                    c_v=float(rng.uniform(-1.0, 1.0)), c_h=float(rng.uniform(-1.0, 1.0)))
                lam_v, lam_h, trace = stepper(state, sig)
                floor = trace.B * cfg.pi_min(sig.ess)
                checked += 1
                if lam_v < floor - tol or lam_h < floor - tol:
                    violations += 1
    return _result("floor_replay", t0, violations == 0,
                   f"{violations} violations over {checked} controller epochs")


def check_regret(horizon: int = 10000, ratio: float = 0.05) -> CheckResult:
    t0 = time.perf_counter()
    pts = bench_stationary_quadratic(horizon=horizon,
                                     checkpoints=(100, 1000, horizon))
    rates = [r for _, r in pts]
    first_loss = 4.0  # loss at the start point u1 = 0 with u* = 2
    decreasing = all(b < a for a, b in zip(rates, rates[1:]))
    ok = decreasing and rates[-1] < ratio * first_loss
    return _result("regret_quadratic", t0, ok,
                   "Regret(T)/T = " + ", ".join(f"{r:.4f}" for r in rates))


ALL_CHECKS = (check_gate_flatness, check_sign_conflict, check_allocation_grid,
              check_gain_cost, check_floor_replay, check_regret)


def run_checks(checks=ALL_CHECKS) -> list[CheckResult]:
    return [chk() for chk in checks]


def format_checks(results) -> str:
    lines = []
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        lines.append(f"[{tag}] {res.name:<18} {res.detail} ({res.elapsed:.2f}s)")
    n_bad = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_bad}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
