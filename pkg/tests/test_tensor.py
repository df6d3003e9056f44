import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdtw import (
    AllocationLedger,
    ConfigError,
    LedgerUnderflowError,
    NonFiniteError,
    OutOfMemoryError,
    SdtwConfig,
    SeriesBatch,
    ShapeError,
    init_dp_table,
    new_series_batch,
)


def test_minimal_batch():
    s = new_series_batch([2.0], 1, 1, 1)
    assert s.data.shape == (1, 1, 1)
    assert s.data[0, 0, 0] == 2.0


def test_shape_arithmetic():
    s = new_series_batch(np.arange(6.0), 1, 3, 2)
    assert s.data.shape == (1, 3, 2)
    assert s.data[0, 2, 1] == 5.0


def test_nonfinite_reports_index():
    with pytest.raises(NonFiniteError, match="index 1"):
        new_series_batch([1.0, np.nan], 1, 2, 1)


def test_raw_size_mismatch():
    with pytest.raises(ShapeError):
        new_series_batch(np.arange(5.0), 1, 3, 2)


def test_from_array_shapes():
    assert SeriesBatch.from_array([1.0, 2.0]).data.shape == (1, 2, 1)
    assert SeriesBatch.from_array(np.ones((4, 3))).data.shape == (1, 4, 3)
    assert SeriesBatch.from_array(np.ones((2, 4, 3)), np.float32).dtype == np.float32


def test_zero_length_rejected():
    with pytest.raises(ShapeError):
        SeriesBatch(np.ones((1, 0, 1)))


def test_init_table_1x1():
    t = init_dp_table(1, 1, 1)
    assert t.data.shape == (1, 3, 3)
    assert t.data[0, 0, 0] == 0
    assert t.data[0, 1, 0] == np.inf and t.data[0, 0, 1] == np.inf


def test_init_table_batch_slices_match():
    t = init_dp_table(2, 2, 3)
    np.testing.assert_array_equal(t.data[0], t.data[1])


def test_init_table_rejects_empty():
    with pytest.raises(ShapeError):
        init_dp_table(1, 0, 1)


@given(st.integers(1, 3), st.integers(1, 12), st.integers(1, 12))
def test_boundary_invariant(b, n, m):
    r = init_dp_table(b, n, m).data
    assert np.count_nonzero(r == 0) == b
    assert np.all(r[:, 0, 0] == 0)
    assert np.all(r[:, 0, 1:] == np.inf)
    assert np.all(r[:, 1:, 0] == np.inf)


def test_ledger_examples():
    led = AllocationLedger()
    led.track(100).track(50)
    assert led.peak_bytes == 150
    led = AllocationLedger()
    led.track(100).release(100).track(60)
    assert (led.peak_bytes, led.live_bytes) == (100, 60)
    with pytest.raises(LedgerUnderflowError):
        AllocationLedger().release(10)


def test_ledger_limit_refuses():
    led = AllocationLedger(limit=100)
    led.track(80)
    with pytest.raises(OutOfMemoryError):
        led.track(30)
    assert led.live_bytes == 80


def test_ledger_empty_and_free():
    led = AllocationLedger()
    a = led.empty((4, 4), np.float32, fill=np.inf)
    assert led.live_bytes == 64 and np.all(a == np.inf)
    led.free(a)
    assert led.live_bytes == 0 and led.peak_bytes == 64


@settings(max_examples=200)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 1000)), max_size=40))
def test_ledger_peak_is_prefix_max(ops):
    led = AllocationLedger()
    live = peak = 0
    for is_track, n in ops:
        if is_track:
            led.track(n)
            live += n
        elif n <= live:
            led.release(n)
            live -= n
        else:
            with pytest.raises(LedgerUnderflowError):
                led.release(n)
        peak = max(peak, live)
    assert led.live_bytes == live
    assert led.peak_bytes == peak


@pytest.mark.parametrize("kw", [dict(gamma=0), dict(gamma=-1), dict(gamma=np.inf),
                                dict(bandwidth=-1), dict(bandwidth=1.5),
                                dict(cost_mode="sparse"), dict(backward_space="cubic")])
def test_config_validation(kw):
    with pytest.raises((ConfigError, ValueError)):
        SdtwConfig(**kw)


def test_config_shape_checks():
    SdtwConfig(bandwidth=2).check_shapes(5, 7)
    with pytest.raises(ConfigError):
        SdtwConfig(bandwidth=1).check_shapes(5, 7)
    with pytest.raises(ConfigError):
        SdtwConfig(normalized=True).check_shapes(2, 3)
