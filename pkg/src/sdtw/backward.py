"""Reverse wavefront for E = dR[N, M] / dd, and input gradients.

The log-space sweep keeps log E and only exponentiates once at the end. The
linear-space sweep multiplies exp'd transition weights directly; it is kept as
a reference and as a demonstration of how that form overflows.

Both sweeps hold the last three diagonals of E in a rolling window and write a
diagonal into the output table only once it can no longer be read as a
successor. With ``reuse_table=True`` the output is written over R itself, which
is dead on a diagonal by then; the peak footprint is one table instead of two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _threads
from .cost import sqdist
from .errors import IncompleteTableError, ShapeError
from .forward import CostAccessor, diag_range, forward
from .tensor import (
    AllocationLedger,
    BackwardSpace,
    DpTableBatch,
    GradTableBatch,
    SdtwConfig,
    SeriesBatch,
    check_pair,
)

from numba import njit, prange


@njit(inline="always", error_model="numpy")
def logsumexp3(a, b, c):
    mx = max(a, max(b, c))
    if mx == -np.inf or mx == np.inf:
        return mx
    return mx + math.log(math.exp(a - mx) + math.exp(b - mx) + math.exp(c - mx))


@njit(inline="always", error_model="numpy")
def _cost(C, x, y, xn, yn, fused, b, i, j):
    if fused:
        return sqdist(x, y, xn, yn, b, i, j)
    return C[b, i, j]


@njit(inline="always", error_model="numpy")
def _weight(R, C, x, y, xn, yn, fused, b, i, j, r, gamma):
    # successor (i, j) is 0-based; caller checked it is inside the grid
    rs = R[b, i + 1, j + 1]
    if rs == np.inf:
        return -rs
    return (rs - r - _cost(C, x, y, xn, yn, fused, b, i, j)) / gamma


@njit(inline="always", error_model="numpy")
def _bwd_cell(R, W, C, x, y, xn, yn, fused, log_space, bad, b, i, j, n, m, gamma):
    p = i + j
    cur = p % 3
    nxt = (p + 1) % 3
    nxt2 = (p + 2) % 3
    one = gamma / gamma
    zero = gamma - gamma
    ninf = -(one / zero)
    if i == n - 1 and j == m - 1:
        W[cur, b, i + 1] = zero if log_space else one
        return
    r = R[b, i + 1, j + 1]
    if r == np.inf:
        bad[b] = 1
        W[cur, b, i + 1] = ninf if log_space else zero
        return
    down = ninf
    right = ninf
    diag = ninf
    if i + 1 < n:
        down = _weight(R, C, x, y, xn, yn, fused, b, i + 1, j, r, gamma)
    if j + 1 < m:
        right = _weight(R, C, x, y, xn, yn, fused, b, i, j + 1, r, gamma)
    if i + 1 < n and j + 1 < m:
        diag = _weight(R, C, x, y, xn, yn, fused, b, i + 1, j + 1, r, gamma)
    if log_space:
        # weight -inf short-circuits before touching the (unwritten) window slot
        t1 = W[nxt, b, i + 2] + down if down != ninf else ninf
        t2 = W[nxt, b, i + 1] + right if right != ninf else ninf
        t3 = W[nxt2, b, i + 2] + diag if diag != ninf else ninf
        W[cur, b, i + 1] = logsumexp3(t1, t2, t3)
    else:
        acc = zero
        if down != ninf:
            acc += W[nxt, b, i + 2] * math.exp(down)
        if right != ninf:
            acc += W[nxt, b, i + 1] * math.exp(right)
        if diag != ninf:
            acc += W[nxt2, b, i + 2] * math.exp(diag)
        W[cur, b, i + 1] = acc


@njit(inline="always")
def _flush(T, W, q, n, m, bw, nb):
    lo, hi = diag_range(q, n, m, bw)
    slot = q % 3
    for b in range(nb):
        for i in range(lo, hi + 1):
            T[b, i + 1, q - i + 1] = W[slot, b, i + 1]


@njit(parallel=True, error_model="numpy", cache=True)
def _backward_kernel(R, T, W, C, x, y, xn, yn, fused, log_space, gamma, bw, threshold, bad):
    nb = R.shape[0]
    n = R.shape[1] - 2
    m = R.shape[2] - 2
    last = n + m - 2
    for p in range(last, -1, -1):
        lo, hi = diag_range(p, n, m, bw)
        ell = hi - lo + 1
        if ell <= 0:
            continue
        if ell < threshold:
            for t in range(nb * ell):
                b = t // ell
                i = lo + t - b * ell
                _bwd_cell(R, W, C, x, y, xn, yn, fused, log_space, bad, b, i, p - i, n, m, gamma)
        else:
            for t in prange(nb * ell):
                b = t // ell
                i = lo + t - b * ell
                _bwd_cell(R, W, C, x, y, xn, yn, fused, log_space, bad, b, i, p - i, n, m, gamma)
        # diagonal p + 2 is no longer read by anyone: its R may be overwritten
        if p + 2 <= last:
            _flush(T, W, p + 2, n, m, bw, nb)
    for q in (1, 0):
        if q <= last:
            _flush(T, W, q, n, m, bw, nb)


@njit(parallel=True, error_model="numpy", cache=True)
def _finalize_kernel(T, bw, exponentiate, fill):
    """Exponentiate in-band interior cells, write ``fill`` everywhere else."""
    nb = T.shape[0]
    n = T.shape[1] - 2
    m = T.shape[2] - 2
    for t in prange(nb * (n + 2)):
        b = t // (n + 2)
        row = t - b * (n + 2)
        for col in range(m + 2):
            inside = 1 <= row <= n and 1 <= col <= m
            if inside and bw > 0:
                inside = abs(row - col) <= bw
            if not inside:
                T[b, row, col] = fill
            elif exponentiate:
                T[b, row, col] = math.exp(T[b, row, col])


def _sweep(r: DpTableBatch, costs: CostAccessor, cfg: SdtwConfig, log_space: bool,
           reuse_table: bool, return_log: bool, ledger: AllocationLedger | None):
    if r.consumed:
        raise IncompleteTableError("DP table was already consumed by a backward pass")
    nb, n, m = r.dims
    if costs.x.data.shape[:2] != (nb, n) or costs.y.data.shape[:2] != (nb, m):
        raise ShapeError("cost accessor does not match the DP table")
    ledger = ledger if ledger is not None else AllocationLedger()
    dtype = r.data.dtype
    bw = r.bandwidth
    window = ledger.empty((3, nb, n + 2), dtype, fill=-np.inf if log_space else 0)
    if reuse_table:
        target = r.data
    else:
        target = ledger.empty(r.data.shape, dtype)
    bad = np.zeros(nb, dtype=np.int8)
    gamma = dtype.type(cfg.gamma)
    with _threads.workers(cfg.workers):
        _backward_kernel(r.data, target, window, *costs.kernel_args(), log_space, gamma, bw,
                         cfg.parallel_threshold, bad)
        if log_space and return_log:
            _finalize_kernel(target, bw, False, dtype.type(-np.inf))
        else:
            _finalize_kernel(target, bw, log_space, dtype.type(0))
    ledger.free(window)
    if reuse_table:
        r.consumed = True
    if bad.any():
        raise IncompleteTableError(
            f"in-band cell with R = +inf in batch elements {np.flatnonzero(bad).tolist()}")
    space = BackwardSpace.LOG if (log_space and return_log) else BackwardSpace.LINEAR
    return GradTableBatch(target, space)


def backward_log(r: DpTableBatch, costs: CostAccessor, cfg: SdtwConfig, *,
                 reuse_table: bool = False, return_log: bool = False,
                 ledger: AllocationLedger | None = None) -> GradTableBatch:
    """E table via the log-space recurrence; exp is applied once at the end.

    ``return_log=True`` skips that final exp and returns log E (unreachable
    cells at -inf). ``reuse_table=True`` writes the result over ``r``.
    """
    return _sweep(r, costs, cfg, True, reuse_table, return_log, ledger)


def backward_linear(r: DpTableBatch, costs: CostAccessor, cfg: SdtwConfig, *,
                    reuse_table: bool = False,
                    ledger: AllocationLedger | None = None) -> GradTableBatch:
    """E table via products of exp'd transition weights.

    Numerically fragile for small gamma: nothing here guards against
    exp overflow, and non-finite entries are returned as-is.
    """
    return _sweep(r, costs, cfg, False, reuse_table, False, ledger)


def backward(r, costs, cfg, **kw) -> GradTableBatch:
    if cfg.backward_space is BackwardSpace.LINEAR:
        return backward_linear(r, costs, cfg, **kw)
    return backward_log(r, costs, cfg, **kw)


@dataclass
class InputGradients:
    grad_x: np.ndarray  # (B, N, D)
    grad_y: np.ndarray  # (B, M, D)


@njit(parallel=True, error_model="numpy", cache=True)
def _grad_x_kernel(E, x, y, out, rowsum):
    nb, n, d = x.shape
    m = y.shape[1]
    for t in prange(nb * n):
        b = t // n
        i = t - b * n
        e = E[b, i + 1, 1]
        s = e
        for k in range(d):
            out[b, i, k] = e * y[b, 0, k]
        for j in range(1, m):
            e = E[b, i + 1, j + 1]
            s += e
            for k in range(d):
                out[b, i, k] += e * y[b, j, k]
        rowsum[b, i] = s
        for k in range(d):
            v = x[b, i, k] * s - out[b, i, k]
            out[b, i, k] = v + v


@njit(parallel=True, error_model="numpy", cache=True)
def _grad_y_kernel(E, x, y, out, colsum):
    nb, m, d = y.shape
    n = x.shape[1]
    for t in prange(nb * m):
        b = t // m
        j = t - b * m
        e = E[b, 1, j + 1]
        s = e
        for k in range(d):
            out[b, j, k] = e * x[b, 0, k]
        for i in range(1, n):
            e = E[b, i + 1, j + 1]
            s += e
            for k in range(d):
                out[b, j, k] += e * x[b, i, k]
        colsum[b, j] = s
        for k in range(d):
            v = y[b, j, k] * s - out[b, j, k]
            out[b, j, k] = v + v


def input_gradients(e: GradTableBatch, x: SeriesBatch, y: SeriesBatch, *,
                    workers: int | None = None,
                    ledger: AllocationLedger | None = None) -> InputGradients:
    """Gradients of the loss w.r.t. x and y from row/column reductions of E.

    grad_x[i] = 2 (x_i sum_j E_ij - sum_j E_ij y_j), symmetric for y. The cost
    tensor and its Jacobian are never formed.
    """
    check_pair(x, y)
    if e.space is not BackwardSpace.LINEAR:
        raise ValueError("input_gradients needs E in linear space")
    if e.dims != (x.batch_size, x.length, y.length):
        raise ShapeError(f"E table dims {e.dims} do not match series "
                         f"({x.batch_size}, {x.length}, {y.length})")
    ledger = ledger if ledger is not None else AllocationLedger()
    rowsum = ledger.empty((x.batch_size, x.length), x.dtype)
    colsum = ledger.empty((y.batch_size, y.length), y.dtype)
    gx = np.empty_like(x.data)
    gy = np.empty_like(y.data)
    with _threads.workers(workers):
        _grad_x_kernel(e.data, x.data, y.data, gx, rowsum)
        _grad_y_kernel(e.data, x.data, y.data, gy, colsum)
    ledger.free(rowsum)
    ledger.free(colsum)
    return InputGradients(gx, gy)


def _value_and_grad_plain(x, y, cfg, ledger):
    costs = CostAccessor.build(x, y, cfg, ledger)
    loss, table = forward(x, y, cfg, costs=costs, ledger=ledger)
    e = backward(table, costs, cfg, reuse_table=True, ledger=ledger)
    costs.release(ledger)
    grads = input_gradients(e, x, y, workers=cfg.workers, ledger=ledger)
    ledger.free(e.data)
    return loss, grads


def value_and_grad(x: SeriesBatch, y: SeriesBatch, cfg: SdtwConfig,
                   ledger: AllocationLedger | None = None):
    """Loss per batch element and its gradients w.r.t. both inputs.

    Honors ``cfg.normalized`` (requires N == M). Outputs and inputs are not
    ledger-tracked; every internal buffer is, and all are released on return.
    """
    check_pair(x, y)
    cfg.check_shapes(x.length, y.length)
    ledger = ledger if ledger is not None else AllocationLedger()
    if not cfg.normalized:
        return _value_and_grad_plain(x, y, cfg, ledger)
    b = x.batch_size
    xs = SeriesBatch(np.concatenate([x.data, x.data, y.data]))
    ys = SeriesBatch(np.concatenate([y.data, x.data, y.data]))
    loss, g = _value_and_grad_plain(xs, ys, cfg, ledger)
    value = loss[:b] - (loss[b:2 * b] + loss[2 * b:]) / 2
    gx = g.grad_x[:b] - (g.grad_x[b:2 * b] + g.grad_y[b:2 * b]) / 2
    gy = g.grad_y[:b] - (g.grad_x[2 * b:] + g.grad_y[2 * b:]) / 2
    return value, InputGradients(gx, gy)
