"""Synthetic datasets for demos and benchmarks."""
from __future__ import annotations

import numpy as np

KINDS = ("blockwave", "sine_mix", "random_walk")


def blockwave(count: int, length: int, dim: int = 1, noise: float = 0.0,
              rng: np.random.Generator | None = None) -> np.ndarray:
    """Zero series with one unit-height block, plus Gaussian noise.

    Block start is uniform on [0.1 L, 0.6 L] and width uniform on [0.2 L, 0.3 L]
    (integer indices, both ends inclusive).
    """
    rng = rng if rng is not None else np.random.default_rng()
    out = np.zeros((count, length, dim))
    for k in range(count):
        start = rng.integers(int(0.1 * length), int(0.6 * length), endpoint=True)
        width = rng.integers(max(1, int(0.2 * length)), max(1, int(0.3 * length)), endpoint=True)
        out[k, start:start + width] = 1.0
    if noise > 0:
        out += rng.normal(0.0, noise, size=out.shape)
    return out


def sine_mix(count: int, length: int, dim: int = 1, noise: float = 0.0,
             rng: np.random.Generator | None = None) -> np.ndarray:
    rng = rng if rng is not None else np.random.default_rng()
    t = np.linspace(0.0, 1.0, length)[None, :, None]
    out = np.zeros((count, length, dim))
    for _ in range(3):
        freq = rng.uniform(1.0, 6.0, size=(count, 1, dim))
        phase = rng.uniform(0.0, 2 * np.pi, size=(count, 1, dim))
        amp = rng.uniform(0.2, 1.0, size=(count, 1, dim))
        out += amp * np.sin(2 * np.pi * freq * t + phase)
    if noise > 0:
        out += rng.normal(0.0, noise, size=out.shape)
    return out


def random_walk(count: int, length: int, dim: int = 1, noise: float = 0.0,
                rng: np.random.Generator | None = None) -> np.ndarray:
    rng = rng if rng is not None else np.random.default_rng()
    out = np.cumsum(rng.normal(0.0, 1.0, size=(count, length, dim)), axis=1)
    if noise > 0:
        out += rng.normal(0.0, noise, size=out.shape)
    return out


def generate(kind: str, count: int, length: int, dim: int = 1, noise: float = 0.0,
             seed: int | None = None) -> np.ndarray:
    """(count, length, dim) array of series of the given kind."""
    if count < 1 or length < 1 or dim < 1:
        raise ValueError("count, length and dim must be >= 1")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    try:
        fn = {"blockwave": blockwave, "sine_mix": sine_mix, "random_walk": random_walk}[kind]
    except KeyError:
        raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}") from None
    return fn(count, length, dim, noise, np.random.default_rng(seed))
