"""Soft-DTW barycenters by gradient descent with Adam."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .backward import value_and_grad
from .errors import ConfigError, ShapeError
from .tensor import SdtwConfig, SeriesBatch

log = logging.getLogger(__name__)


def _as_member(s) -> np.ndarray:
    a = s.data if isinstance(s, SeriesBatch) else np.asarray(s, dtype=np.float64)
    if a.ndim == 3:
        if a.shape[0] != 1:
            raise ShapeError("barycenter members must have batch size 1")
        a = a[0]
    elif a.ndim == 1:
        a = a[:, None]
    return np.ascontiguousarray(a, dtype=np.float64)


@dataclass
class BarycenterProblem:
    series: list
    target_length: int
    gamma: float = 1.0
    bandwidth: int = 0
    weights: np.ndarray | None = None
    cost_mode: str = "unfused"
    workers: int | None = None

    def __post_init__(self):
        self.series = [_as_member(s) for s in self.series]
        if not self.series:
            raise ConfigError("barycenter needs at least one series")
        dims = {s.shape[1] for s in self.series}
        if len(dims) != 1:
            raise ShapeError(f"members disagree on feature dim: {sorted(dims)}")
        if self.target_length < 1:
            raise ConfigError("target_length must be >= 1")
        k = len(self.series)
        if self.weights is None:
            self.weights = np.ones(k)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (k,):
            raise ShapeError(f"expected {k} weights, got shape {self.weights.shape}")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ConfigError("weights must be finite and nonnegative")
        if not np.isclose(self.weights.sum(), k, rtol=1e-9, atol=0):
            raise ConfigError(f"weights must sum to K={k}, got {self.weights.sum()}")
        self.config  # validates gamma / bandwidth

    @property
    def feature_dim(self) -> int:
        return self.series[0].shape[1]

    @property
    def config(self) -> SdtwConfig:
        return SdtwConfig(gamma=self.gamma, bandwidth=self.bandwidth,
                          cost_mode=self.cost_mode, workers=self.workers)


def barycenter_objective(z, prob: BarycenterProblem):
    """Weighted sum of sdtw(z, x_k) and its gradient w.r.t. z (shape (L_z, D)).

    Members of equal length share one batched kernel call.
    """
    z = _as_member(z)
    if z.shape != (prob.target_length, prob.feature_dim):
        raise ShapeError(f"z has shape {z.shape}, expected "
                         f"({prob.target_length}, {prob.feature_dim})")
    cfg = prob.config
    groups = defaultdict(list)
    for k, s in enumerate(prob.series):
        groups[len(s)].append(k)
    losses = np.empty(len(prob.series))
    grads = np.empty((len(prob.series),) + z.shape)
    for idx in groups.values():
        xs = SeriesBatch(np.broadcast_to(z, (len(idx),) + z.shape).copy())
        ys = SeriesBatch(np.stack([prob.series[k] for k in idx]))
        loss, g = value_and_grad(xs, ys, cfg)
        losses[idx] = loss
        grads[idx] = g.grad_x
    w = prob.weights
    value = float(np.dot(w, losses))
    grad = np.tensordot(w, grads, axes=1)
    return value, grad


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None

    def update(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.first_moment is None:
            self.first_moment = np.zeros_like(params)
            self.second_moment = np.zeros_like(params)
        self.step += 1
        self.first_moment = self.beta1 * self.first_moment + (1 - self.beta1) * grad
        self.second_moment = self.beta2 * self.second_moment + (1 - self.beta2) * grad * grad
        m_hat = self.first_moment / (1 - self.beta1 ** self.step)
        v_hat = self.second_moment / (1 - self.beta2 ** self.step)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class BarycenterTrace:
    objective_per_iteration: list = field(default_factory=list)
    final_z: SeriesBatch | None = None
    iterations_run: int = 0
    converged: bool = False

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.objective_per_iteration))

    @property
    def best_objective(self) -> float:
        return float(min(self.objective_per_iteration))


def _resample(s: np.ndarray, length: int) -> np.ndarray:
    if len(s) == length:
        return s.copy()
    src = np.linspace(0.0, 1.0, len(s))
    dst = np.linspace(0.0, 1.0, length)
    return np.stack([np.interp(dst, src, s[:, k]) for k in range(s.shape[1])], axis=1)


def initial_barycenter(prob: BarycenterProblem, init="auto", index: int = 0) -> np.ndarray:
    """Starting point: ``euclidean_mean``, ``member_copy`` (of ``index``), an array, or ``auto``."""
    lengths = {len(s) for s in prob.series}
    if isinstance(init, str) and init == "auto":
        init = "euclidean_mean" if lengths == {prob.target_length} else "member_copy"
    if isinstance(init, str):
        if init == "euclidean_mean":
            if lengths != {prob.target_length}:
                raise ConfigError("euclidean_mean init needs every member at target_length")
            return np.mean(np.stack(prob.series), axis=0)
        if init == "member_copy":
            if not 0 <= index < len(prob.series):
                raise ConfigError(f"member index {index} out of range")
            # members of another length are linearly resampled to target_length
            return _resample(prob.series[index], prob.target_length)
        raise ConfigError(f"unknown init {init!r}")
    z = _as_member(init)
    if z.shape != (prob.target_length, prob.feature_dim):
        raise ShapeError(f"user init has shape {z.shape}")
    return z.copy()


def solve_barycenter(prob: BarycenterProblem, init="auto", *, init_index: int = 0,
                     max_iters: int = 200, lr: float = 0.01, beta1: float = 0.9,
                     beta2: float = 0.999, eps: float = 1e-8, tol: float = 1e-6,
                     patience: int = 5) -> BarycenterTrace:
    """Minimize the weighted Soft-DTW sum with Adam.

    Stops after ``max_iters`` steps, or once the relative objective change
    stays below ``tol`` for ``patience`` consecutive steps. The returned
    ``final_z`` is the best iterate seen, not necessarily the last.
    """
    if max_iters < 0:
        raise ConfigError("max_iters must be >= 0")
    z = initial_barycenter(prob, init, init_index)
    adam = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    value, grad = barycenter_objective(z, prob)
    trace = BarycenterTrace([value])
    best_z, best = z, value
    quiet = 0
    for it in range(1, max_iters + 1):
        z = adam.update(z, grad)
        new_value, grad = barycenter_objective(z, prob)
        trace.objective_per_iteration.append(new_value)
        trace.iterations_run = it
        if new_value < best:
            best_z, best = z, new_value
        change = abs(new_value - value) / max(1.0, abs(new_value))
        value = new_value
        quiet = quiet + 1 if change < tol else 0
        if quiet >= patience:
            trace.converged = True
            log.debug("converged after %d iterations", it)
            break
    trace.final_z = SeriesBatch(best_z[None])
    return trace
