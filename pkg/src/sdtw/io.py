"""Series files: text CSV, the binary "SDTW" format, and pair manifests.

Binary layout (little-endian): b"SDTW", version byte 1, uint32 L, uint32 D,
uint32 scalar width (4 or 8), then L*D scalars row-major.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import SdtwError

MAGIC = b"SDTW"
VERSION = 1
_HEADER = struct.Struct("<4sBIII")
_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


class SeriesFormatError(SdtwError):
    pass


def parse_series_text(text: str, source: str = "<string>") -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError:
            raise SeriesFormatError(f"{source}:{lineno}: cannot parse {line!r}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SeriesFormatError(
                f"{source}:{lineno}: expected {width} values, got {len(row)}")
        if not all(np.isfinite(row)):
            raise SeriesFormatError(f"{source}:{lineno}: non-finite value")
        rows.append(row)
    if not rows:
        raise SeriesFormatError(f"{source}: no data rows")
    return np.array(rows, dtype=np.float64)


def format_series_text(arr) -> str:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr[:, None]
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in arr)


def encode_binary(arr) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.dtype == np.float32:
        width = 4
    else:
        width = 8
        arr = arr.astype(np.float64)
    length, dim = arr.shape
    header = _HEADER.pack(MAGIC, VERSION, length, dim, width)
    return header + np.ascontiguousarray(arr, dtype=_DTYPES[width]).tobytes()


def decode_binary(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise SeriesFormatError(f"{source}: truncated header")
    magic, version, length, dim, width = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SeriesFormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise SeriesFormatError(f"{source}: unsupported version {version}")
    if width not in _DTYPES:
        raise SeriesFormatError(f"{source}: scalar width must be 4 or 8, got {width}")
    expected = _HEADER.size + length * dim * width
    if len(blob) != expected:
        raise SeriesFormatError(f"{source}: expected {expected} bytes, got {len(blob)}")
    data = np.frombuffer(blob, dtype=_DTYPES[width], offset=_HEADER.size)
    return data.reshape(length, dim).astype(_DTYPES[width].newbyteorder("="))


def read_series(path) -> np.ndarray:
    """Load one (L, D) series; the binary format is recognized by its magic bytes."""
    path = Path(path)
    blob = path.read_bytes()
    if blob.startswith(MAGIC):
        return decode_binary(blob, str(path))
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise SeriesFormatError(f"{path}: neither text nor SDTW binary") from None
    return parse_series_text(text, str(path))


def write_series(path, arr, binary: bool = False) -> None:
    path = Path(path)
    if binary:
        path.write_bytes(encode_binary(arr))
    else:
        path.write_text(format_series_text(arr))


def read_manifest(path) -> list[tuple[Path, Path]]:
    """Lines of ``x_path,y_path``; relative paths resolve against the manifest's folder."""
    path = Path(path)
    base = path.parent
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not all(parts):
            raise SeriesFormatError(f"{path}:{lineno}: expected 'x_path,y_path'")
        pairs.append(tuple(base / p for p in parts))
    if not pairs:
        raise SeriesFormatError(f"{path}: no pairs")
    return pairs
