"""Timing comparisons between the numpy and compiled kernel backends."""
from __future__ import annotations

import time

import numpy as np

from ..nnet.backend import available_backends, get_kernels

MATMUL_SHAPES = [(64, 16, 32), (256, 32, 64), (1024, 64, 64)]
ELEMWISE_SIZES = [4096, 65536]


def _time(fn, repeats=30) -> float:
    fn()  # warm caches and any lazy allocation
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(repeats=30, seed=0) -> list[dict]:
    """Best-of-N wall times per kernel and backend. Returns rows of timings."""
    rng = np.random.default_rng(seed)
    rows = []
    backends = {name: get_kernels(name) for name in available_backends()}
    for (m, k, n) in MATMUL_SHAPES:
        a = rng.standard_normal((m, k))
        b = rng.standard_normal((k, n))
        at = np.ascontiguousarray(a.T)
        bt = np.ascontiguousarray(b.T)
        for op, args in [("matmul_nn", (a, b)), ("matmul_tn", (at, b)),
                         ("matmul_nt", (a, bt))]:
            row = {"op": op, "shape": f"{m}x{k}x{n}"}
            for name, kern in backends.items():
                row[name] = _time(lambda kern=kern, op=op, args=args:
                                  getattr(kern, op)(*args), repeats)
            rows.append(row)
    for size in ELEMWISE_SIZES:
        z = rng.standard_normal(size)
        row = {"op": "relu", "shape": str(size)}
        for name, kern in backends.items():
            row[name] = _time(lambda kern=kern: kern.relu(z), repeats)
        rows.append(row)
        theta = rng.standard_normal(size)
        grad = rng.standard_normal(size)
        mom = np.zeros(size)
        vel = np.zeros(size)
        row = {"op": "adam_step", "shape": str(size)}
        for name, kern in backends.items():
            row[name] = _time(lambda kern=kern: kern.adam_step_inplace(
                theta.copy(), grad, mom.copy(), vel.copy(),
                1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001), repeats)
        rows.append(row)
    return rows


def format_bench(rows) -> str:
    names = [k for k in rows[0] if k not in ("op", "shape")]
    head = f"{'op':<12} {'shape':<12} " + " ".join(f"{n:>12}" for n in names)
    if len(names) > 1:
        head += f" {'speedup':>8}"
    lines = [head]
    for row in rows:
        line = f"{row['op']:<12} {row['shape']:<12} "
        line += " ".join(f"{row[n] * 1e6:>10.1f}us" for n in names)
        if len(names) > 1:
            ratio = row[names[0]] / max(row[names[-1]], 1e-12)
            line += f" {ratio:>7.2f}x"
        lines.append(line)
    return "\n".join(lines) + "\n"
