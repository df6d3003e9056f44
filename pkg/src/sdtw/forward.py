"""Soft-DTW forward recurrence on an anti-diagonal wavefront.

Cells with equal ``i + j`` only read the two previous diagonals, so each
diagonal is a parallel-for over (batch, cell) with an implicit barrier before
the next one starts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _threads
from .cost import NormCache, compute_norm_cache, materialize_costs, sqdist
from .errors import ConfigError, ShapeError, UnreachableEndError
from .tensor import (
    AllocationLedger,
    CostMode,
    SdtwConfig,
    SeriesBatch,
    check_pair,
    init_dp_table,
)

from numba import njit, prange


@njit(inline="always", error_model="numpy")
def softmin(a, b, c, gamma):
    """-gamma * log(exp(-a/gamma) + exp(-b/gamma) + exp(-c/gamma)), shifted by the min."""
    m = min(a, min(b, c))
    if m == np.inf:
        return m
    s = math.exp((m - a) / gamma) + math.exp((m - b) / gamma) + math.exp((m - c) / gamma)
    return m - gamma * math.log(s)


@njit(inline="always")
def diag_range(p, n, m, bw):
    """Inclusive row range of in-band cells on anti-diagonal ``p`` (0-based)."""
    lo = max(0, p - m + 1)
    hi = min(n - 1, p)
    if bw > 0:
        lo = max(lo, (p - bw + 1) // 2)
        hi = min(hi, (p + bw) // 2)
    return lo, hi


@njit(inline="always")
def max_diag_len(n, m, bw):
    longest = min(n, m)
    if bw > 0:
        longest = min(longest, bw + 1)
    return longest


@njit(inline="always", error_model="numpy")
def _cell(R, C, x, y, xn, yn, fused, b, i, j, gamma):
    if fused:
        c = sqdist(x, y, xn, yn, b, i, j)
    else:
        c = C[b, i, j]
    R[b, i + 1, j + 1] = c + softmin(R[b, i, j], R[b, i, j + 1], R[b, i + 1, j], gamma)


@njit(parallel=True, error_model="numpy", cache=True)
def _forward_kernel(R, C, x, y, xn, yn, fused, gamma, bw, threshold):
    nb = R.shape[0]
    n = R.shape[1] - 2
    m = R.shape[2] - 2
    if max_diag_len(n, m, bw) <= threshold:
        # small grid: row-major sweep per batch element, no per-diagonal dispatch
        for b in prange(nb):
            for i in range(n):
                jlo = 0
                jhi = m - 1
                if bw > 0:
                    jlo = max(0, i - bw)
                    jhi = min(m - 1, i + bw)
                for j in range(jlo, jhi + 1):
                    _cell(R, C, x, y, xn, yn, fused, b, i, j, gamma)
        return
    for p in range(n + m - 1):
        lo, hi = diag_range(p, n, m, bw)
        ell = hi - lo + 1
        if ell <= 0:
            continue
        if ell < threshold:
            for t in range(nb * ell):
                b = t // ell
                i = lo + t - b * ell
                _cell(R, C, x, y, xn, yn, fused, b, i, p - i, gamma)
        else:
            for t in prange(nb * ell):
                b = t // ell
                i = lo + t - b * ell
                _cell(R, C, x, y, xn, yn, fused, b, i, p - i, gamma)


@dataclass
class WavefrontPlan:
    n: int
    m: int
    bandwidth: int
    diagonals: list = field(default_factory=list)  # (p, i_min, i_max)

    def cells(self):
        for p, lo, hi in self.diagonals:
            for i in range(lo, hi + 1):
                yield i, p - i

    def __len__(self):
        return sum(hi - lo + 1 for _, lo, hi in self.diagonals)


def build_wavefront_plan(n: int, m: int, bandwidth: int = 0) -> WavefrontPlan:
    if n < 1 or m < 1:
        raise ShapeError(f"grid dimensions must be >= 1, got {n}x{m}")
    if bandwidth < 0 or (bandwidth and bandwidth < abs(n - m)):
        raise ConfigError(f"bandwidth {bandwidth} disconnects ({n - 1}, {m - 1}) from (0, 0)")
    plan = WavefrontPlan(n, m, bandwidth)
    for p in range(n + m - 1):
        lo, hi = diag_range(p, n, m, bandwidth)
        if lo <= hi:
            plan.diagonals.append((p, lo, hi))
    return plan


@dataclass
class CostAccessor:
    """What the kernels read costs from: the materialized tensor, or the raw series."""

    x: SeriesBatch
    y: SeriesBatch
    cache: NormCache
    matrix: np.ndarray | None = None

    @property
    def fused(self) -> bool:
        return self.matrix is None

    @classmethod
    def build(cls, x: SeriesBatch, y: SeriesBatch, cfg: SdtwConfig,
              ledger: AllocationLedger | None = None) -> CostAccessor:
        check_pair(x, y)
        cache = compute_norm_cache(x, y, ledger)
        matrix = None
        if cfg.cost_mode is CostMode.UNFUSED:
            matrix = materialize_costs(x, y, cache, ledger, cfg.workers)
        return cls(x, y, cache, matrix)

    def kernel_args(self):
        c = self.matrix if self.matrix is not None else np.empty((0, 0, 0), self.x.dtype)
        return (c, self.x.data, self.y.data, self.cache.x_sqnorms, self.cache.y_sqnorms,
                self.fused)

    def release(self, ledger: AllocationLedger) -> None:
        ledger.free(self.matrix)
        self.matrix = None
        ledger.free(self.cache.x_sqnorms)
        ledger.free(self.cache.y_sqnorms)


def forward(x: SeriesBatch, y: SeriesBatch, cfg: SdtwConfig, *,
            costs: CostAccessor | None = None,
            ledger: AllocationLedger | None = None):
    """Soft-DTW loss per batch element and the filled DP table.

    Returns ``(loss, table)`` with ``loss[b] == table.data[b, N, M]``.
    """
    check_pair(x, y)
    n, m = x.length, y.length
    cfg.check_shapes(n, m, normalized=False)
    ledger = ledger if ledger is not None else AllocationLedger()
    owned = costs is None
    if owned:
        costs = CostAccessor.build(x, y, cfg, ledger)
    table = init_dp_table(x.batch_size, n, m, x.dtype, ledger)
    table.bandwidth = cfg.bandwidth
    gamma = x.dtype.type(cfg.gamma)
    with _threads.workers(cfg.workers):
        _forward_kernel(table.data, *costs.kernel_args(), gamma, cfg.bandwidth,
                        cfg.parallel_threshold)
    if owned:
        costs.release(ledger)
    loss = table.data[:, n, m].copy()
    if not np.all(np.isfinite(loss)):
        bad = np.flatnonzero(~np.isfinite(loss))
        raise UnreachableEndError(f"R[N, M] is not finite for batch elements {bad.tolist()}")
    return loss, table


def _normalized_batch(x: SeriesBatch, y: SeriesBatch):
    xs = np.concatenate([x.data, x.data, y.data])
    ys = np.concatenate([y.data, x.data, y.data])
    return SeriesBatch(xs), SeriesBatch(ys)


def forward_normalized(x: SeriesBatch, y: SeriesBatch, cfg: SdtwConfig,
                       ledger: AllocationLedger | None = None) -> np.ndarray:
    """sdtw(x, y) - (sdtw(x, x) + sdtw(y, y)) / 2, for equal lengths only."""
    check_pair(x, y)
    cfg.check_shapes(x.length, y.length, normalized=True)
    xs, ys = _normalized_batch(x, y)
    loss, table = forward(xs, ys, cfg, ledger=ledger)
    if ledger is not None:
        ledger.free(table.data)
    b = x.batch_size
    return loss[:b] - (loss[b:2 * b] + loss[2 * b:]) / 2
