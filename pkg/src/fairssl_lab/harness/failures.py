"""Failure-mode flags computed from a finished (or aborted) run log."""
from __future__ import annotations

import math


def masking_collapse(q_trace, t_warm: int, floor: float = 0.05,
                     warm_min: float = 0.2, tail_frac: float = 0.1) -> bool:
    """Gate starved late despite a healthy warmup exit.

    True iff the mean pass ratio over the last 10% of epochs fell below 0.05
    while q at warmup exit was at least 0.2 (so the gate did not start dead).
    """
    if len(q_trace) <= t_warm:
        return False
    tail = max(1, math.ceil(tail_frac * len(q_trace)))
    tail_mean = sum(q_trace[-tail:]) / tail
    return tail_mean < floor and q_trace[t_warm - 1] >= warm_min


def detect_failures(epoch_rows, saturated: bool, t_warm: int) -> dict:
    """Both flags; ``saturated`` comes from saturation_detect on final test probs."""
    q_trace = [row["q"] for row in epoch_rows]
    return {
        "masking_collapse": bool(masking_collapse(q_trace, t_warm)),
        "trivial_saturation": bool(saturated),
    }
