"""Online primal-dual budget/allocation controller and its ablation.

One controller step per epoch: smooth the observables, filter gain vs cost
through noise margins, move the log-budget, gate urgencies by gradient
alignment, and split the budget between the fairness and stability penalties.
Warmup epochs hold the outputs fixed while baselines accumulate.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class SignalError(ValueError):
    pass


class WarmupIncompleteError(RuntimeError):
    pass


@dataclass
class OpdaConfig:
    rho: float = 0.9              # EMA momentum shared by every smoothed quantity
    t_warm: int = 20              # warmup epochs with frozen outputs
    window: int | None = None     # rolling-delta window; default clip(t_warm, 10, 30)
    k_margin: float = 1.0         # noise-margin multiplier
    beta_gate: float = 8.0        # alignment gate sharpness
    b_min: float = 0.0
    eps_b: float = 1e-8
    b_max_soft: float = 1e6
    eta0: float = 0.5             # budget step scale, eta_t = eta0/sqrt(max(1, t - t_warm))
    eps_alloc: float = 1e-8
    b_warm: float = 1.0           # budget held during warmup

    def __post_init__(self):
        if self.window is None:
            self.window = int(np.clip(self.t_warm, 10, 30))
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must lie in [0, 1)")
        if self.t_warm < 1:
            raise ValueError("t_warm must be >= 1")
        if self.beta_gate <= 0 or self.k_margin < 0 or self.eta0 <= 0:
            raise ValueError("beta_gate, eta0 must be positive; k_margin >= 0")
        if not (0 <= self.b_min < self.b_max_soft) or self.eps_b <= 0:
            raise ValueError("need 0 <= b_min < b_max_soft and eps_b > 0")
        if not (self.b_min < self.b_warm <= self.b_max_soft):
            raise ValueError("b_warm must lie in (b_min, b_max_soft]")

    def eta(self, t: int) -> float:
        return self.eta0 / math.sqrt(max(1, t - self.t_warm))

    def beta_leak(self, t: int) -> float:
        return 1.0 / math.sqrt(1.0 + t)

    def pi_min(self, ess: float) -> float:
        return 1.0 / (10.0 + 2.0 * max(1.0, ess))

    @property
    def u_lo(self) -> float:
        return math.log(self.b_min + self.eps_b)

    @property
    def u_hi(self) -> float:
        return math.log(self.b_max_soft)


_RANGE_SLACK = 1e-6


def _checked(name, x, lo, hi):
    x = float(x)
    if not math.isfinite(x) or x < lo - _RANGE_SLACK or x > hi + _RANGE_SLACK:
        raise SignalError(f"{name}={x} outside [{lo}, {hi}]")
    return min(max(x, lo), hi)


@dataclass
class EpochSignals:
    v: float       # training fairness penalty, >= 0
    r: float       # 1 - validation macro F1 at threshold 0.5
    q: float       # gate pass ratio
    p: float       # weak/strong agreement on gated entries
    ess: float     # effective sample size of gated confidences, >= 1
    c_v: float     # cos(grad fairness penalty, grad base objective)
    c_h: float     # cos(grad entropy penalty, grad base objective)

    def __post_init__(self):
        self.v = _checked("v", self.v, 0.0, math.inf)
        self.r = _checked("r", self.r, 0.0, 1.0)
        self.q = _checked("q", self.q, 0.0, 1.0)
        self.p = _checked("p", self.p, 0.0, 1.0)
        self.ess = _checked("ess", self.ess, 1.0, math.inf)
        self.c_v = _checked("c_v", self.c_v, -1.0, 1.0)
        self.c_h = _checked("c_h", self.c_h, -1.0, 1.0)


@dataclass
class OpdaState:
    cfg: OpdaConfig
    t: int = 0
    u: float = 0.0
    B: float = 1.0
    pi: float = 0.5
    vbar: float | None = None
    rbar: float | None = None
    pibar: float | None = None
    dv_bar: float | None = None
    dh_bar: float | None = None
    dv_window: deque = field(default_factory=deque)
    dr_window: deque = field(default_factory=deque)
    warm_q: list = field(default_factory=list)
    warm_p: list = field(default_factory=list)
    warm_ess: list = field(default_factory=list)
    q0: float | None = None
    p0: float | None = None
    ess0: float | None = None
    u_warm: float | None = None
    frozen_steps: int = 0   # budget freezes triggered by non-finite s

    @property
    def warmed_up(self) -> bool:
        return self.q0 is not None


def opda_init(cfg: OpdaConfig | None = None) -> OpdaState:
    cfg = cfg or OpdaConfig()
    state = OpdaState(cfg=cfg)
    state.B = cfg.b_warm
    state.u = math.log(max(cfg.b_warm, cfg.b_min + cfg.eps_b))
    state.pi = 0.5
    state.dv_window = deque(maxlen=cfg.window)
    state.dr_window = deque(maxlen=cfg.window)
    return state


@dataclass
class ControllerTrace:
    t: int
    u: float
    B: float
    pi: float
    lambda_v: float
    lambda_h: float
    G: float
    C: float
    s: float
    s_tilde: float
    d_v: float
    d_h: float
    m_v: float
    m_r: float
    c_v: float
    c_h: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ema(prev: float | None, x: float, rho: float) -> float:
    """rho * prev + (1 - rho) * x; the first observation initializes prev = x."""
    if prev is None:
        return x
    return rho * prev + (1.0 - rho) * x


def noise_margin(window, k: float, warm: bool = False) -> float:
    """k times the sample std of recent deltas; infinite until enough history.

    The infinite warmup margin forces the gain/cost filters to zero, freezing
    the budget while baselines accumulate.
    """
    if warm or len(window) < 2:
        return math.inf
    return k * float(np.std(np.asarray(window, dtype=np.float64), ddof=1))


def gain_cost(dv: float, dr: float, m_v: float, m_r: float):
    """G = [-dv - m_v]_+, C = [dr - m_r]_+, s = G - C."""
    G = max(0.0, -dv - m_v)
    C = max(0.0, dr - m_r)
    return G, C, G - C


def gate(c: float, beta: float = 8.0) -> float:
    """phi(c) = sigmoid(beta * c); suppresses urgency under anti-alignment."""
    z = beta * c
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def budget_update(state: OpdaState, s: float, eta_t: float, m_v: float, m_r: float):
    """Clipped log-domain ascent with a decaying leak toward the warmup anchor.

    Returns (u_next, B_next, s_tilde, frozen); a non-finite s freezes the
    budget for the epoch instead of poisoning it.
    """
    cfg = state.cfg
    if not math.isfinite(s):
        return state.u, state.B, 0.0, True
    s_max = 3.0 * (m_v + m_r + 1e-8)
    s_tilde = min(max(s, -s_max), s_max)
    leak = cfg.beta_leak(state.t) * (state.u - state.u_warm)
    u_next = min(max(state.u + eta_t * s_tilde - leak, cfg.u_lo), cfg.u_hi)
    b_next = min(max(math.exp(u_next), cfg.b_min), cfg.b_max_soft)
    return u_next, b_next, s_tilde, False


def urgencies(state: OpdaState, signals: EpochSignals, G: float, gated: bool = True):
    """Raw urgency pair before EMA smoothing.

    d_v: gated current violation plus filtered improvement headroom.
    d_h: gated pseudo-label health deficits against the warmup baselines.
    """
    if not state.warmed_up:
        raise WarmupIncompleteError("urgencies need warmup baselines")
    beta = state.cfg.beta_gate
    g_v = gate(signals.c_v, beta) if gated else 1.0
    g_h = gate(signals.c_h, beta) if gated else 1.0
    raw_dv = g_v * (state.vbar + G)
    deficit = (
        max(0.0, state.q0 - signals.q) / max(state.q0, 1e-3)
        + max(0.0, state.p0 - signals.p) / max(state.p0, 1e-3)
        + max(0.0, state.ess0 - signals.ess) / max(state.ess0, 1.0)
    )
    raw_dh = g_h * deficit
    return raw_dv, raw_dh


def allocate(dv_bar: float, dh_bar: float, ess: float, pibar: float | None,
             cfg: OpdaConfig):
    """Closed-form argmin of dv*(pi-1)^2 + dh*pi^2, smoothed and floor-clipped."""
    pi_star = dv_bar / (dv_bar + dh_bar + cfg.eps_alloc)
    pibar_next = ema(pibar, pi_star, cfg.rho)
    floor = cfg.pi_min(ess)
    pi = min(max(pibar_next, floor), 1.0 - floor)
    return pi_star, pibar_next, pi


def _step(state: OpdaState, signals: EpochSignals, lite: bool):
    cfg = state.cfg
    state.t += 1
    t = state.t

    prev_vbar, prev_rbar = state.vbar, state.rbar
    state.vbar = ema(state.vbar, signals.v, cfg.rho)
    state.rbar = ema(state.rbar, signals.r, cfg.rho)
    dv = state.vbar - prev_vbar if prev_vbar is not None else 0.0
    dr = state.rbar - prev_rbar if prev_rbar is not None else 0.0
    if t >= 2:
        state.dv_window.append(dv)
        state.dr_window.append(dr)

    if t <= cfg.t_warm:
        state.warm_q.append(signals.q)
        state.warm_p.append(signals.p)
        state.warm_ess.append(signals.ess)
        if t == cfg.t_warm:
            state.q0 = float(np.mean(state.warm_q))
            state.p0 = float(np.mean(state.warm_p))
            state.ess0 = float(np.mean(state.warm_ess))
            state.u_warm = state.u
        lam_v = state.B * state.pi
        lam_h = state.B * (1.0 - state.pi)
        trace = ControllerTrace(
            t=t, u=state.u, B=state.B, pi=state.pi, lambda_v=lam_v, lambda_h=lam_h,
            G=0.0, C=0.0, s=0.0, s_tilde=0.0, d_v=0.0, d_h=0.0,
            m_v=math.inf, m_r=math.inf, c_v=signals.c_v, c_h=signals.c_h,
        )
        return lam_v, lam_h, trace

    m_v = noise_margin(state.dv_window, cfg.k_margin)
    m_r = noise_margin(state.dr_window, cfg.k_margin)
    G, C, s = gain_cost(dv, dr, m_v, m_r)

    eta_t = cfg.eta(t)
    if lite:
        if math.isfinite(s):
            sign = float(np.sign(s))
            b_next = min(max(state.B * math.exp(eta_t * sign), cfg.b_min), cfg.b_max_soft)
            u_next = math.log(max(b_next, cfg.b_min + cfg.eps_b))
            s_tilde = sign
        else:
            u_next, b_next, s_tilde = state.u, state.B, 0.0
            state.frozen_steps += 1
    else:
        u_next, b_next, s_tilde, frozen = budget_update(state, s, eta_t, m_v, m_r)
        if frozen:
            state.frozen_steps += 1

    raw_dv, raw_dh = urgencies(state, signals, G, gated=not lite)
    state.dv_bar = ema(state.dv_bar, raw_dv, cfg.rho)
    state.dh_bar = ema(state.dh_bar, raw_dh, cfg.rho)
    _, state.pibar, pi = allocate(state.dv_bar, state.dh_bar, signals.ess,
                                  state.pibar, cfg)

    state.u, state.B, state.pi = u_next, b_next, pi
    lam_v = state.B * state.pi
    lam_h = state.B * (1.0 - state.pi)
    trace = ControllerTrace(
        t=t, u=state.u, B=state.B, pi=state.pi, lambda_v=lam_v, lambda_h=lam_h,
        G=G, C=C, s=s, s_tilde=s_tilde, d_v=state.dv_bar, d_h=state.dh_bar,
        m_v=m_v, m_r=m_r, c_v=signals.c_v, c_h=signals.c_h,
    )
    return lam_v, lam_h, trace


def opda_step(state: OpdaState, signals: EpochSignals):
    """Full controller: margins, leaky log-budget, alignment-gated allocation."""
    return _step(state, signals, lite=False)


def opda_lite_step(state: OpdaState, signals: EpochSignals):
    """Ablation: no alignment gates, multiplicative sign-rule budget, no leak."""
    return _step(state, signals, lite=True)


def regret_run(grad_fn, loss_fn, horizon: int, u0: float, domain,
               eta_fn, comparator_fn, checkpoints):
    """Project the no-leak budget rule (s_t = -grad) onto a 1-d loss sequence.

    comparator_fn(T) must return min_u sum_{t<=T} loss_t(u) over the domain.
    Returns [(T, Regret(T)/T)] at the requested checkpoints.
    """
    lo, hi = domain
    u = min(max(u0, lo), hi)
    cum = 0.0
    out = []
    marks = set(checkpoints)
    for t in range(1, horizon + 1):
        cum += loss_fn(t, u)
        if t in marks:
            out.append((t, (cum - comparator_fn(t)) / t))
        u = min(max(u - eta_fn(t) * grad_fn(t, u), lo), hi)
    return out


def bench_stationary_quadratic(horizon: int = 10000, u0: float = 0.0,
                               u_star: float = 2.0, domain=(-5.0, 5.0),
                               checkpoints=(100, 1000, 10000)):
    """loss_t(u) = (u - u*)^2 with u* inside the domain, so the comparator is 0."""
    return regret_run(
        grad_fn=lambda t, u: 2.0 * (u - u_star),
        loss_fn=lambda t, u: (u - u_star) ** 2,
        horizon=horizon, u0=u0, domain=domain,
        eta_fn=lambda t: 1.0 / math.sqrt(t),
        comparator_fn=lambda T: 0.0,
        checkpoints=checkpoints,
    )


def bench_alternating_linear(horizon: int = 10000, u0: float = 0.0,
                             domain=(-1.0, 1.0), checkpoints=(100, 1000, 10000)):
    """loss_t(u) = c_t * u with c_t alternating +1/-1; adversarial-ish drift."""
    lo, hi = domain

    def coef(t):
        return 1.0 if t % 2 == 1 else -1.0

    def comparator(T):
        s = 1.0 if T % 2 == 1 else 0.0  # sum of alternating signs
        return min(s * lo, s * hi)

    return regret_run(
        grad_fn=lambda t, u: coef(t),
        loss_fn=lambda t, u: coef(t) * u,
        horizon=horizon, u0=u0, domain=domain,
        eta_fn=lambda t: 1.0 / math.sqrt(t),
        comparator_fn=comparator,
        checkpoints=checkpoints,
    )
