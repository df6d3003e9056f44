"""Batched containers, padding conventions and allocation accounting."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    ConfigError,
    LedgerUnderflowError,
    NonFiniteError,
    OutOfMemoryError,
    ShapeError,
)

FLOAT_TYPES = (np.float32, np.float64)


class CostMode(str, Enum):
    UNFUSED = "unfused"
    FUSED = "fused"


class BackwardSpace(str, Enum):
    LOG = "log"
    LINEAR = "linear"


def _as_float_array(data, dtype=None):
    arr = np.asarray(data)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    elif arr.dtype not in FLOAT_TYPES:
        arr = arr.astype(np.float64)
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class SeriesBatch:
    """B sequences of common length L with D features, stored as a (B, L, D) array."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.data)
        if arr.ndim != 3:
            raise ShapeError(f"expected a (B, L, D) array, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ShapeError(f"every dimension must be >= 1, got {arr.shape}")
        bad = np.flatnonzero(~np.isfinite(arr.ravel()))
        if bad.size:
            raise NonFiniteError(int(bad[0]))
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, arr, dtype=None) -> SeriesBatch:
        """Accepts (L,), (L, D) or (B, L, D) input."""
        arr = _as_float_array(arr, dtype)
        if arr.ndim == 1:
            arr = arr[None, :, None]
        elif arr.ndim == 2:
            arr = arr[None]
        return cls(arr)

    @property
    def batch_size(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.data.shape[2]

    @property
    def dtype(self):
        return self.data.dtype

    def astype(self, dtype) -> SeriesBatch:
        return SeriesBatch(self.data.astype(dtype))

    def __len__(self):
        return self.batch_size


def new_series_batch(raw, b: int, l: int, d: int, dtype=None) -> SeriesBatch:
    flat = _as_float_array(raw, dtype).ravel()
    if b < 1 or l < 1 or d < 1:
        raise ShapeError(f"dimensions must be >= 1, got b={b}, l={l}, d={d}")
    if flat.size != b * l * d:
        raise ShapeError(f"raw length {flat.size} != b*l*d = {b * l * d}")
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise NonFiniteError(int(bad[0]))
    return SeriesBatch(flat.reshape(b, l, d))


@dataclass
class AllocationLedger:
    """Byte accounting for long-lived buffers.

    Stands in for a device memory counter: every buffer the kernels keep alive
    across a pass is registered here, so peak usage is deterministic.
    """

    limit: int | None = None
    live_bytes: int = 0
    peak_bytes: int = 0

    def track(self, nbytes: int) -> AllocationLedger:
        nbytes = int(nbytes)
        if nbytes < 0:
            raise ValueError("nbytes must be nonnegative")
        if self.limit is not None and self.live_bytes + nbytes > self.limit:
            raise OutOfMemoryError(nbytes, self.live_bytes, self.limit)
        self.live_bytes += nbytes
        self.peak_bytes = max(self.peak_bytes, self.live_bytes)
        return self

    def release(self, nbytes: int) -> AllocationLedger:
        nbytes = int(nbytes)
        if nbytes > self.live_bytes:
            raise LedgerUnderflowError(
                f"release of {nbytes} bytes exceeds live {self.live_bytes}")
        self.live_bytes -= nbytes
        return self

    def reset(self) -> None:
        self.live_bytes = 0
        self.peak_bytes = 0

    def empty(self, shape, dtype, fill=None) -> np.ndarray:
        """Allocate and track an array; the caller releases ``arr.nbytes``."""
        nbytes = int(np.prod(shape, dtype=np.int64)) * np.dtype(dtype).itemsize
        self.track(nbytes)
        try:
            arr = np.empty(shape, dtype=dtype)
        except MemoryError:
            self.live_bytes -= nbytes
            raise OutOfMemoryError(nbytes) from None
        if fill is not None:
            arr.fill(fill)
        return arr

    def free(self, arr: np.ndarray | None) -> None:
        if arr is not None:
            self.release(arr.nbytes)


@dataclass
class DpTableBatch:
    """Accumulated-cost table R, padded to (B, N+2, M+2).

    Cell (i, j) of the 0-based grid lives at storage (i+1, j+1). Row/column 0
    holds the boundary, row N+1 / column M+1 exist so the backward sweep can
    read successors without branching on the edge.
    """

    data: np.ndarray
    bandwidth: int = 0
    consumed: bool = False

    @property
    def dims(self) -> tuple[int, int, int]:
        b, n2, m2 = self.data.shape
        return b, n2 - 2, m2 - 2

    @property
    def interior(self) -> np.ndarray:
        _, n, m = self.dims
        return self.data[:, 1:n + 1, 1:m + 1]


@dataclass
class GradTableBatch:
    """Alignment-gradient table E (linear space) or its logarithm, padded like R."""

    data: np.ndarray
    space: BackwardSpace = BackwardSpace.LINEAR

    @property
    def dims(self) -> tuple[int, int, int]:
        b, n2, m2 = self.data.shape
        return b, n2 - 2, m2 - 2

    @property
    def interior(self) -> np.ndarray:
        _, n, m = self.dims
        return self.data[:, 1:n + 1, 1:m + 1]


def init_dp_table(b: int, n: int, m: int, dtype=np.float64,
                  ledger: AllocationLedger | None = None) -> DpTableBatch:
    if b < 1 or n < 1 or m < 1:
        raise ShapeError(f"table dimensions must be >= 1, got ({b}, {n}, {m})")
    shape = (b, n + 2, m + 2)
    if ledger is None:
        data = np.full(shape, np.inf, dtype=dtype)
    else:
        data = ledger.empty(shape, dtype, fill=np.inf)
    data[:, 0, 0] = 0
    return DpTableBatch(data)


@dataclass(frozen=True)
class SdtwConfig:
    gamma: float = 1.0
    bandwidth: int = 0
    cost_mode: CostMode = CostMode.UNFUSED
    backward_space: BackwardSpace = BackwardSpace.LOG
    normalized: bool = False
    # None means all available hardware threads
    workers: int | None = None
    # diagonals shorter than this run serially (dispatch overhead dominates)
    parallel_threshold: int = 64

    def __post_init__(self):
        gamma = float(self.gamma)
        if not (gamma > 0 and np.isfinite(gamma)):
            raise ConfigError(f"gamma must be a positive finite number, got {self.gamma}")
        object.__setattr__(self, "gamma", gamma)
        if int(self.bandwidth) != self.bandwidth or self.bandwidth < 0:
            raise ConfigError(f"bandwidth must be a nonnegative integer, got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", int(self.bandwidth))
        object.__setattr__(self, "cost_mode", CostMode(self.cost_mode))
        object.__setattr__(self, "backward_space", BackwardSpace(self.backward_space))
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def check_shapes(self, n: int, m: int, normalized: bool | None = None) -> None:
        if self.bandwidth and self.bandwidth < abs(n - m):
            raise ConfigError(
                f"bandwidth {self.bandwidth} < |N - M| = {abs(n - m)}: end cell unreachable")
        normalized = self.normalized if normalized is None else normalized
        if normalized and n != m:
            raise ConfigError(f"normalized variant requires N == M, got N={n}, M={m}")


def check_pair(x: SeriesBatch, y: SeriesBatch) -> None:
    if x.batch_size != y.batch_size:
        raise ShapeError(f"batch sizes differ: {x.batch_size} vs {y.batch_size}")
    if x.feature_dim != y.feature_dim:
        raise ShapeError(f"feature dims differ: {x.feature_dim} vs {y.feature_dim}")
    if x.dtype != y.dtype:
        raise ShapeError(f"dtypes differ: {x.dtype} vs {y.dtype}")
