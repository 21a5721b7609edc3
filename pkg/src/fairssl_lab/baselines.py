"""Single-signal dual-weight schedules: fixed, EMA-proportional, PI, dual ascent.

Each controller sees only the EMA-smoothed fairness violation and a target
calibrated once from warmup epochs. They drive the fairness weight alone; the
stability weight stays at zero by construction.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .controller import ema

KINDS = ("static", "emap", "pi", "dualasc")

LAMBDA_CAP = 1e6
KAPPA_P_EMAP = 0.1
KAPPA_P_PI = 1.0
KAPPA_I_PI = 0.1
ETA_DUALASC = 0.1


class CalibrationError(RuntimeError):
    pass


def calibrate_vtgt(warmup_violations, fraction: float = 0.5) -> float:
    """v_tgt = fraction * median of the warmup-epoch violations."""
    if len(warmup_violations) == 0:
        raise CalibrationError("cannot calibrate a target from zero warmup epochs")
    return fraction * float(statistics.median(warmup_violations))


@dataclass
class BaselineState:
    kind: str
    lam: float
    rho: float = 0.9
    vbar: float | None = None
    integral: float = 0.0
    v_tgt: float | None = None
    lam0: float = 0.0   # warmup weight, the PI setpoint origin

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")

    @property
    def calibrated(self) -> bool:
        return self.kind == "static" or self.v_tgt is not None


def baseline_init(kind: str, lam_fixed: float = 0.0, lam_warm: float = 1.0,
                  rho: float = 0.9) -> BaselineState:
    """Static starts (and stays) at lam_fixed; adaptive kinds hold lam_warm
    until calibrate() hands them a target."""
    lam = lam_fixed if kind == "static" else lam_warm
    return BaselineState(kind=kind, lam=lam, rho=rho, lam0=lam)


def calibrate(state: BaselineState, warmup_violations, fraction: float = 0.5) -> None:
    if state.kind != "static":
        state.v_tgt = calibrate_vtgt(warmup_violations, fraction)


def static_step(state: BaselineState, v_t: float) -> float:
    state.vbar = ema(state.vbar, v_t, state.rho)
    return state.lam


def emap_step(state: BaselineState, v_t: float) -> float:
    """Multiplicative proportional rule on the relative EMA error."""
    _require_target(state)
    state.vbar = ema(state.vbar, v_t, state.rho)
    err = (state.vbar - state.v_tgt) / max(state.v_tgt, 1e-8)
    growth = KAPPA_P_EMAP * err
    if state.lam <= 0.0:
        state.lam = 0.0  # the multiplicative rule cannot leave zero
    elif growth >= math.log(LAMBDA_CAP / state.lam):
        state.lam = LAMBDA_CAP  # exp would overflow long before the cap clip
    else:
        state.lam = min(max(state.lam * math.exp(growth), 0.0), LAMBDA_CAP)
    return state.lam


def pi_step(state: BaselineState, v_t: float) -> float:
    """Additive proportional-integral rule; the integral term can wind up."""
    _require_target(state)
    state.vbar = ema(state.vbar, v_t, state.rho)
    e = state.vbar - state.v_tgt
    state.integral += e
    state.lam = min(max(state.lam0 + KAPPA_P_PI * e + KAPPA_I_PI * state.integral,
                        0.0), LAMBDA_CAP)
    return state.lam


def dualasc_step(state: BaselineState, v_t: float, eta: float = ETA_DUALASC) -> float:
    """Rectified dual ascent; lambda = 0 is reachable (no anti-starvation floor)."""
    _require_target(state)
    state.vbar = ema(state.vbar, v_t, state.rho)
    state.lam = max(state.lam + eta * (state.vbar - state.v_tgt), 0.0)
    return state.lam


def baseline_step(state: BaselineState, v_t: float) -> float:
    step = {"static": static_step, "emap": emap_step,
            "pi": pi_step, "dualasc": dualasc_step}[state.kind]
    return step(state, v_t)


def _require_target(state: BaselineState) -> None:
    if state.v_tgt is None:
        raise CalibrationError(f"{state.kind} stepped before warmup calibration")
