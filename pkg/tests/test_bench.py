import io

import numpy as np
import pytest

from sdtw import ConfigError
from sdtw.bench import CSV_FIELDS, BenchConfigRow, expand_grid, run_bench_row, write_bench_csv


@pytest.mark.parametrize("kw", [dict(repeats=0), dict(warmup=-1), dict(length=0),
                                dict(precision="f16"), dict(gamma=0.0)])
def test_row_validation(kw):
    args = dict(batch=1, length=4, feature_dim=1)
    args.update(kw)
    with pytest.raises((ConfigError, ValueError)):
        BenchConfigRow(**args)


def test_row_defaults():
    row = BenchConfigRow(2, 8, 3)
    assert (row.repeats, row.warmup, row.precision) == (5, 1, "f32")


def test_run_row_ok():
    res = run_bench_row(BenchConfigRow(2, 16, 4, repeats=3))
    assert res.ok
    assert len(res.runtimes_ms) == 3 and res.mean_runtime_ms > 0
    assert res.peak_ledger_bytes > 0
    assert res.cross_mode_rel_diff <= 1e-4


def test_fused_peak_smaller():
    rows = expand_grid([4], [64], [8], repeats=1, warmup=0)
    peaks = {r.cost_mode: run_bench_row(r).peak_ledger_bytes for r in rows}
    assert peaks["unfused"] - peaks["fused"] >= 4 * 4 * 64 * 64


def test_long_sequence_row_ok():
    for mode in ("unfused", "fused"):
        res = run_bench_row(BenchConfigRow(1, 1500, 2, cost_mode=mode, repeats=1, warmup=0))
        assert res.ok, res.status


def test_csv_rows():
    results = [run_bench_row(BenchConfigRow(1, 8, 2, repeats=1, warmup=0))]
    fh = io.StringIO()
    write_bench_csv(results, fh)
    header, row = fh.getvalue().splitlines()
    assert header.split(",") == CSV_FIELDS
    assert row.endswith(",ok")


def test_deterministic_loss_across_workers():
    from sdtw import SdtwConfig, value_and_grad
    from sdtw.bench import make_inputs
    x, y = make_inputs(BenchConfigRow(2, 70, 3), seed=1)
    a = value_and_grad(x, y, SdtwConfig(workers=1, parallel_threshold=1))
    b = value_and_grad(x, y, SdtwConfig(workers=4, parallel_threshold=1))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1].grad_x, b[1].grad_x)
