"""Slow, independent reference implementations for tests and gradient checks.

Plain row-major loops over Python floats. Nothing here shares code with the
compiled kernels; the gradient table is built by pushing soft-argmin
probabilities back to predecessors rather than through the log-space
recurrence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

INF = math.inf


def _as_2d(s) -> np.ndarray:
    a = np.asarray(s, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected a single series of shape (L,) or (L, D), got {a.shape}")
    return a


def naive_costs(x, y) -> np.ndarray:
    """Squared Euclidean costs by direct expansion of (x_ik - y_jk)^2."""
    xa, ya = _as_2d(x), _as_2d(y)
    if xa.shape[1] != ya.shape[1]:
        raise ValueError("feature dims differ")
    out = np.empty((len(xa), len(ya)))
    for i, xi in enumerate(xa):
        diff = xi[None, :] - ya
        out[i] = (diff * diff).sum(axis=1)
    return out


@dataclass
class DtwResult:
    distance: float
    path: list = field(default_factory=list)
    unique: bool = True


def hard_dtw(x, y) -> DtwResult:
    """Classical DTW with squared Euclidean cost and a backtracked optimal path.

    Ties during backtracking are broken diagonal, then up, then left, and
    flag the result as not unique.
    """
    d = naive_costs(x, y).tolist()
    n, m = len(d), len(d[0])
    r = [[INF] * (m + 1) for _ in range(n + 1)]
    r[0][0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            r[i][j] = d[i - 1][j - 1] + min(r[i - 1][j - 1], r[i - 1][j], r[i][j - 1])
    path = [(n - 1, m - 1)]
    unique = True
    i, j = n, m
    while (i, j) != (1, 1):
        options = [(r[i - 1][j - 1], (i - 1, j - 1)),
                   (r[i - 1][j], (i - 1, j)),
                   (r[i][j - 1], (i, j - 1))]
        best = min(v for v, _ in options)
        hits = [c for v, c in options if v == best]
        if len(hits) > 1:
            unique = False
        i, j = hits[0]
        path.append((i - 1, j - 1))
    path.reverse()
    return DtwResult(r[n][m], path, unique)


def softdtw_from_costs(d, gamma: float):
    """Loss, R (with the (N+1)x(M+1) boundary) and E for a given cost matrix."""
    d = np.asarray(d, dtype=np.float64).tolist()
    n, m = len(d), len(d[0])
    exp, log = math.exp, math.log
    r = [[INF] * (m + 1) for _ in range(n + 1)]
    smin = [[0.0] * (m + 1) for _ in range(n + 1)]
    r[0][0] = 0.0
    for i in range(1, n + 1):
        prev, cur, di, si = r[i - 1], r[i], d[i - 1], smin[i]
        for j in range(1, m + 1):
            a, b, c = prev[j - 1], prev[j], cur[j - 1]
            lo = a if a < b else b
            lo = lo if lo < c else c
            total = 0.0
            for v in (a, b, c):
                if v < INF:
                    total += exp((lo - v) / gamma)
            s = lo - gamma * log(total) if lo < INF else INF
            si[j] = s
            cur[j] = di[j - 1] + s

    # push each cell's mass back to its predecessors with the softmin's
    # argmin probabilities exp(-(R_pred - softmin) / gamma)
    e = [[0.0] * (m + 1) for _ in range(n + 1)]
    e[n][m] = 1.0
    for i in range(n, 0, -1):
        for j in range(m, 0, -1):
            mass = e[i][j]
            if mass == 0.0 or (i, j) == (1, 1):
                continue
            s = smin[i][j]
            for pi, pj in ((i - 1, j - 1), (i - 1, j), (i, j - 1)):
                rp = r[pi][pj]
                if rp < INF and pi >= 1 and pj >= 1:
                    e[pi][pj] += mass * math.exp(-(rp - s) / gamma)
    loss = r[n][m]
    e_table = np.array([row[1:] for row in e[1:]])
    return loss, np.array(r), e_table


def naive_softdtw(x, y, gamma: float):
    """Reference Soft-DTW for one pair: (loss, R table, E table)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return softdtw_from_costs(naive_costs(x, y), gamma)


def fd_gradient(f, x, step: float = 1e-5) -> np.ndarray:
    """Central differences (f(x + h e_k) - f(x - h e_k)) / 2h for every coordinate."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        hi = f(x)
        flat[k] = orig - step
        lo = f(x)
        flat[k] = orig
        gflat[k] = (hi - lo) / (2 * step)
    return grad
