import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sdtw.generate import generate
from sdtw.io import (
    SeriesFormatError,
    decode_binary,
    encode_binary,
    format_series_text,
    parse_series_text,
    read_manifest,
    read_series,
    write_series,
)


def test_parse_text_with_comments():
    arr = parse_series_text("# header comment\n1,2\n\n3,4\n")
    np.testing.assert_array_equal(arr, [[1, 2], [3, 4]])


@pytest.mark.parametrize("text,line", [("1,2\n3\n", 2), ("1\nabc\n", 2), ("# c\n1\nnan\n", 3)])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(SeriesFormatError, match=f"f.csv:{line}:"):
        parse_series_text(text, "f.csv")


def test_parse_empty():
    with pytest.raises(SeriesFormatError):
        parse_series_text("# nothing\n")


def test_binary_header_layout():
    blob = encode_binary(np.array([[1.0, 2.0]], dtype=np.float32))
    assert blob[:4] == b"SDTW" and blob[4] == 1
    assert int.from_bytes(blob[5:9], "little") == 1
    assert int.from_bytes(blob[9:13], "little") == 2
    assert int.from_bytes(blob[13:17], "little") == 4
    assert blob[17:] == np.array([1.0, 2.0], dtype="<f4").tobytes()


def test_binary_rejects_corruption():
    blob = encode_binary(np.zeros((2, 2)))
    with pytest.raises(SeriesFormatError):
        decode_binary(blob[:-1])
    with pytest.raises(SeriesFormatError):
        decode_binary(b"XDTW" + blob[4:])
    with pytest.raises(SeriesFormatError):
        decode_binary(blob[:4] + b"\x02" + blob[5:])


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=finite))
def test_roundtrips(arr):
    np.testing.assert_array_equal(decode_binary(encode_binary(arr)), arr)
    np.testing.assert_array_equal(parse_series_text(format_series_text(arr)), arr)


def test_read_write_files(tmp_path):
    arr = np.arange(6.0).reshape(3, 2)
    write_series(tmp_path / "a.csv", arr)
    write_series(tmp_path / "a.bin", arr.astype(np.float32), binary=True)
    np.testing.assert_array_equal(read_series(tmp_path / "a.csv"), arr)
    back = read_series(tmp_path / "a.bin")
    assert back.dtype == np.float32
    np.testing.assert_array_equal(back, arr)


def test_manifest_relative_paths(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "m.txt").write_text("# pairs\nx.csv,y.csv\n/abs/p.csv, q.csv\n")
    pairs = read_manifest(tmp_path / "sub" / "m.txt")
    assert pairs[0] == (tmp_path / "sub" / "x.csv", tmp_path / "sub" / "y.csv")
    assert str(pairs[1][0]) == "/abs/p.csv"


def test_manifest_bad_line(tmp_path):
    (tmp_path / "m.txt").write_text("a.csv\n")
    with pytest.raises(SeriesFormatError, match=":1:"):
        read_manifest(tmp_path / "m.txt")


def test_blockwave_noise_free():
    data = generate("blockwave", 1, 50, noise=0.0, seed=5)
    assert set(np.unique(data)) <= {0.0, 1.0}


def test_blockwave_block_geometry():
    length = 100
    data = generate("blockwave", 200, length, noise=0.0, seed=0)[:, :, 0]
    for s in data:
        idx = np.flatnonzero(s)
        assert 10 <= idx[0] <= 60
        assert 20 <= len(idx) <= 30
        assert np.all(np.diff(idx) == 1)


@pytest.mark.parametrize("kind", ["blockwave", "sine_mix", "random_walk"])
def test_generate_seeded(kind):
    a = generate(kind, 3, 20, 2, 0.1, seed=9)
    assert a.shape == (3, 20, 2)
    np.testing.assert_array_equal(a, generate(kind, 3, 20, 2, 0.1, seed=9))


@pytest.mark.parametrize("kw", [dict(kind="square"), dict(count=0), dict(noise=-1.0)])
def test_generate_validation(kw):
    args = dict(kind="blockwave", count=2, length=10)
    args.update(kw)
    with pytest.raises(ValueError):
        generate(**args)
