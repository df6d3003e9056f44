"""Runtime and ledger-memory benchmark of forward + backward."""
from __future__ import annotations

import csv
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .backward import value_and_grad
from .errors import ConfigError, SdtwError
from .forward import forward
from .tensor import AllocationLedger, SdtwConfig, SeriesBatch

log = logging.getLogger(__name__)

PRECISIONS = {"f32": np.float32, "f64": np.float64}

# large grid: B in {16, 32}, L in {128 .. 2048}, D = 64
LARGE_GRID = dict(batch=(16, 32), length=(128, 512, 1024, 2048), feature_dim=(64,))


@dataclass(frozen=True)
class BenchConfigRow:
    batch: int
    length: int
    feature_dim: int
    gamma: float = 1.0
    cost_mode: str = "unfused"
    backward_space: str = "log"
    repeats: int = 5
    warmup: int = 1
    precision: str = "f32"
    bandwidth: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.warmup < 0:
            raise ConfigError(f"warmup must be >= 0, got {self.warmup}")
        if min(self.batch, self.length, self.feature_dim) < 1:
            raise ConfigError("batch, length and feature_dim must be >= 1")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {sorted(PRECISIONS)}")
        self.config()

    def config(self, **changes) -> SdtwConfig:
        kw = dict(gamma=self.gamma, bandwidth=self.bandwidth, cost_mode=self.cost_mode,
                  backward_space=self.backward_space)
        kw.update(changes)
        return SdtwConfig(**kw)


@dataclass
class BenchResultRow:
    config: BenchConfigRow
    mean_runtime_ms: float = float("nan")
    std_runtime_ms: float = float("nan")
    peak_ledger_bytes: int = 0
    cross_mode_rel_diff: float = float("nan")
    status: str = "ok"
    runtimes_ms: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> dict:
        d = asdict(self.config)
        d.update(mean_runtime_ms=self.mean_runtime_ms, std_runtime_ms=self.std_runtime_ms,
                 peak_ledger_bytes=self.peak_ledger_bytes,
                 cross_mode_rel_diff=self.cross_mode_rel_diff, status=self.status)
        return d


CSV_FIELDS = list(BenchConfigRow.__dataclass_fields__) + [
    "mean_runtime_ms", "std_runtime_ms", "peak_ledger_bytes", "cross_mode_rel_diff", "status"]


def make_inputs(row: BenchConfigRow, seed: int = 0):
    rng = np.random.default_rng(seed)
    dtype = PRECISIONS[row.precision]
    shape = (row.batch, row.length, row.feature_dim)
    return (SeriesBatch(rng.standard_normal(shape).astype(dtype)),
            SeriesBatch(rng.standard_normal(shape).astype(dtype)))


def run_bench_row(row: BenchConfigRow, *, seed: int = 0, workers: int | None = None,
                  mem_limit: int | None = None, check_modes: bool = True) -> BenchResultRow:
    """Warm up, then time ``repeats`` full forward+backward passes.

    Input generation happens outside the timed region. Allocation refusals
    under ``mem_limit`` are reported in ``status`` instead of raised.
    """
    result = BenchResultRow(row)
    x, y = make_inputs(row, seed)
    cfg = row.config(workers=workers)
    try:
        for _ in range(row.warmup):
            value_and_grad(x, y, cfg, AllocationLedger(limit=mem_limit))
        peak = 0
        for _ in range(row.repeats):
            ledger = AllocationLedger(limit=mem_limit)
            t0 = time.perf_counter()
            loss, _ = value_and_grad(x, y, cfg, ledger)
            result.runtimes_ms.append((time.perf_counter() - t0) * 1e3)
            peak = max(peak, ledger.peak_bytes)
        result.peak_ledger_bytes = peak
        result.mean_runtime_ms = statistics.fmean(result.runtimes_ms)
        result.std_runtime_ms = (statistics.stdev(result.runtimes_ms)
                                 if len(result.runtimes_ms) > 1 else 0.0)
        if check_modes:
            other = "fused" if cfg.cost_mode.value == "unfused" else "unfused"
            other_loss, _ = forward(x, y, replace(cfg, cost_mode=other))
            denom = np.maximum(1.0, np.abs(other_loss.astype(np.float64)))
            result.cross_mode_rel_diff = float(
                np.max(np.abs(loss.astype(np.float64) - other_loss) / denom))
    except (SdtwError, MemoryError) as exc:
        result.status = f"error: {exc}"
        log.warning("bench row %s failed: %s", row, exc)
    return result


def expand_grid(batch, length, feature_dim, modes=("unfused", "fused"), **common):
    return [BenchConfigRow(b, l, d, cost_mode=mode, **common)
            for b in batch for l in length for d in feature_dim for mode in modes]


def run_bench(rows, **kw) -> list[BenchResultRow]:
    out = []
    for row in rows:
        res = run_bench_row(row, **kw)
        log.info("%s -> %s", row, res.status)
        out.append(res)
    return out


def write_bench_csv(results, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(r.as_dict())
