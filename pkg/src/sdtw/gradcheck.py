"""Finite-difference check of input gradients over a grid of small problems."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .backward import value_and_grad
from .forward import forward
from .oracle import fd_gradient
from .tensor import SdtwConfig, SeriesBatch


@dataclass
class GradcheckCase:
    n: int
    m: int
    dim: int
    gamma: float
    mode: str
    max_rel_err: float
    finite: bool

    def passed(self, tol: float) -> bool:
        return self.finite and self.max_rel_err <= tol


def rel_error(analytic, numeric) -> float:
    """max |a - f| / max(1, |a|), the normalization used throughout."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def check_pair(x: np.ndarray, y: np.ndarray, cfg: SdtwConfig, step: float = 1e-5):
    """Analytic and finite-difference gradients for one (N, D) / (M, D) pair."""
    xs, ys = SeriesBatch(x[None]), SeriesBatch(y[None])
    _, g = value_and_grad(xs, ys, cfg)
    dtype = x.dtype

    def loss_x(xv):
        return float(forward(SeriesBatch(xv[None].astype(dtype)), ys, cfg)[0][0])

    def loss_y(yv):
        return float(forward(xs, SeriesBatch(yv[None].astype(dtype)), cfg)[0][0])

    fx = fd_gradient(loss_x, x, step)
    fy = fd_gradient(loss_y, y, step)
    return (g.grad_x[0], g.grad_y[0]), (fx, fy)


def run_gradcheck(sizes=range(1, 7), gammas=(0.1, 1.0, 10.0), dims=(1, 3),
                  modes=("unfused", "fused"), backward_space="log", seed=0,
                  scale=1.0, step=1e-5, dtype=np.float64, workers=None,
                  parallel_threshold=64) -> list[GradcheckCase]:
    rng = np.random.default_rng(seed)
    cases = []
    for n, m, d, gamma in itertools.product(sizes, sizes, dims, gammas):
        x = (scale * rng.standard_normal((n, d))).astype(dtype)
        y = (scale * rng.standard_normal((m, d))).astype(dtype)
        for mode in modes:
            cfg = SdtwConfig(gamma=gamma, cost_mode=mode, backward_space=backward_space,
                             workers=workers, parallel_threshold=parallel_threshold)
            (gx, gy), (fx, fy) = check_pair(x, y, cfg, step)
            finite = bool(np.all(np.isfinite(gx)) and np.all(np.isfinite(gy)))
            err = max(rel_error(gx, fx), rel_error(gy, fy)) if finite else float("inf")
            cases.append(GradcheckCase(n, m, d, gamma, mode, err, finite))
    return cases


def summarize(cases) -> dict:
    """Worst case per (gamma, mode): ``{(gamma, mode): (max_rel_err, n_nonfinite)}``."""
    out = {}
    for c in cases:
        err, bad = out.get((c.gamma, c.mode), (0.0, 0))
        out[(c.gamma, c.mode)] = (max(err, c.max_rel_err), bad + (not c.finite))
    return out
