"""Pairwise squared-Euclidean costs, materialized (unfused) or per cell (fused).

Both routes evaluate ``|x|^2 - 2<x, y> + |y|^2`` through the same compiled
scalar routine, accumulating features in index order, so the fused and
materialized values are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _threads
from .errors import ShapeError
from .tensor import AllocationLedger, SeriesBatch, check_pair

from numba import njit, prange


@dataclass
class NormCache:
    x_sqnorms: np.ndarray  # (B, N)
    y_sqnorms: np.ndarray  # (B, M)

    @property
    def nbytes(self) -> int:
        return self.x_sqnorms.nbytes + self.y_sqnorms.nbytes


@njit(inline="always", error_model="numpy")
def sqdist(x, y, xn, yn, b, i, j):
    # i, j index series elements (0-based); no float literals, so float32 stays float32
    dot = x[b, i, 0] * y[b, j, 0]
    for k in range(1, x.shape[2]):
        dot += x[b, i, k] * y[b, j, k]
    v = xn[b, i] - (dot + dot) + yn[b, j]
    if v < 0:
        v = v - v
    return v


@njit(error_model="numpy", cache=True)
def _sqdist_scalar(x, y, xn, yn, b, i, j):
    return sqdist(x, y, xn, yn, b, i, j)


@njit(parallel=True, error_model="numpy", cache=True)
def _materialize_kernel(x, y, xn, yn, out):
    nb, n, m = out.shape
    for t in prange(nb * n):
        b = t // n
        i = t - b * n
        for j in range(m):
            out[b, i, j] = sqdist(x, y, xn, yn, b, i, j)


@njit(parallel=True, error_model="numpy", cache=True)
def _sqnorm_kernel(x, out):
    nb, n, d = x.shape
    for t in prange(nb * n):
        b = t // n
        i = t - b * n
        s = x[b, i, 0] * x[b, i, 0]
        for k in range(1, d):
            s += x[b, i, k] * x[b, i, k]
        out[b, i] = s


def compute_norm_cache(x: SeriesBatch, y: SeriesBatch,
                       ledger: AllocationLedger | None = None) -> NormCache:
    check_pair(x, y)
    ledger = ledger if ledger is not None else AllocationLedger()
    xn = ledger.empty((x.batch_size, x.length), x.dtype)
    yn = ledger.empty((y.batch_size, y.length), y.dtype)
    _sqnorm_kernel(x.data, xn)
    _sqnorm_kernel(y.data, yn)
    return NormCache(xn, yn)


def materialize_costs(x: SeriesBatch, y: SeriesBatch, cache: NormCache,
                      ledger: AllocationLedger | None = None,
                      workers: int | None = None) -> np.ndarray:
    """Full (B, N, M) cost tensor, tracked on ``ledger`` (caller frees it)."""
    check_pair(x, y)
    _check_cache(x, y, cache)
    ledger = ledger if ledger is not None else AllocationLedger()
    out = ledger.empty((x.batch_size, x.length, y.length), x.dtype)
    with _threads.workers(workers):
        _materialize_kernel(x.data, y.data, cache.x_sqnorms, cache.y_sqnorms, out)
    return out


def cost_at(x: SeriesBatch, y: SeriesBatch, cache: NormCache, b: int, i: int, j: int):
    """Cost of DP cell (i, j), 1-based over the table interior."""
    if not (0 <= b < x.batch_size and 1 <= i <= x.length and 1 <= j <= y.length):
        raise IndexError(
            f"cell (b={b}, i={i}, j={j}) outside batch {x.batch_size}, "
            f"grid {x.length}x{y.length}")
    return _sqdist_scalar(x.data, y.data, cache.x_sqnorms, cache.y_sqnorms, b, i - 1, j - 1)


def _check_cache(x, y, cache):
    if cache.x_sqnorms.shape != (x.batch_size, x.length) or \
            cache.y_sqnorms.shape != (y.batch_size, y.length):
        raise ShapeError("norm cache does not match the series pair")
