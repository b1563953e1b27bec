"""Pure-Python Fincke-Pohst kernel, used when the compiled kernel is absent."""
from __future__ import annotations

import math

import numpy as np


def fp_enumerate(qdiag, mu, r_out2: float, r_in2: float, lo, hi, record_inner: bool,
                 limit: int):
    """Enumerate ``x`` with ``sum_i q_i (x_i + sum_{j>i} mu_ij x_j)^2 <= r_out2``.

    Returns ``(n_inner, points, values, overflow)`` exactly as the compiled
    kernel does.
    """
    q = [float(v) for v in qdiag]
    m = [[float(v) for v in row] for row in np.asarray(mu)]
    lo = [int(v) for v in lo]
    hi = [int(v) for v in hi]
    n = len(q)
    x = [0] * n
    upper = [0] * n
    center = [0.0] * n
    partial = [0.0] * (n + 1)
    pts: list[tuple[int, ...]] = []
    vals: list[float] = []
    n_inner = 0
    overflow = False

    def open_level(i):
        c = -sum(m[i][j] * x[j] for j in range(i + 1, n))
        center[i] = c
        rem = r_out2 - partial[i + 1]
        if rem < 0:
            x[i], upper[i] = 1, 0
            return
        w = math.sqrt(rem / q[i])
        x[i] = max(math.ceil(c - w), lo[i])
        upper[i] = min(math.floor(c + w), hi[i])

    i = n - 1
    open_level(i)
    while i < n:
        if x[i] > upper[i]:
            i += 1
            if i < n:
                x[i] += 1
            continue
        diff = x[i] - center[i]
        s = partial[i + 1] + q[i] * diff * diff
        if s > r_out2:
            x[i] += 1
            continue
        partial[i] = s
        if i > 0:
            i -= 1
            open_level(i)
            continue
        if s <= r_in2:
            n_inner += 1
        if s > r_in2 or record_inner:
            if len(pts) >= limit:
                overflow = True
                break
            pts.append(tuple(x))
            vals.append(s)
        x[0] += 1
    points = np.array(pts, dtype=np.int64).reshape(len(pts), n)
    return n_inner, points, np.array(vals, dtype=np.float64), overflow
