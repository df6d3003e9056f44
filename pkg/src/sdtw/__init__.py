"""Batched Soft-DTW with wavefront-parallel kernels, log-space gradients and
a fused (cost-tensor-free) mode."""
from . import _threads  # noqa: F401  sizes the thread pool before numba loads
from ._threads import workers
from .backward import (
    InputGradients,
    backward,
    backward_linear,
    backward_log,
    input_gradients,
    logsumexp3,
    value_and_grad,
)
from .cost import NormCache, compute_norm_cache, cost_at, materialize_costs
from .errors import (
    ConfigError,
    IncompleteTableError,
    LedgerUnderflowError,
    NonFiniteError,
    OutOfMemoryError,
    SdtwError,
    ShapeError,
    UnreachableEndError,
)
from .forward import (
    CostAccessor,
    WavefrontPlan,
    build_wavefront_plan,
    forward,
    forward_normalized,
    softmin,
)
from .tensor import (
    AllocationLedger,
    BackwardSpace,
    CostMode,
    DpTableBatch,
    GradTableBatch,
    SdtwConfig,
    SeriesBatch,
    init_dp_table,
    new_series_batch,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationLedger", "BackwardSpace", "ConfigError", "CostAccessor", "CostMode",
    "DpTableBatch", "GradTableBatch", "IncompleteTableError", "InputGradients",
    "LedgerUnderflowError", "NonFiniteError", "NormCache", "OutOfMemoryError", "SdtwConfig",
    "SdtwError", "SeriesBatch", "ShapeError", "UnreachableEndError", "WavefrontPlan",
    "backward", "backward_linear", "backward_log", "build_wavefront_plan", "compute_norm_cache",
    "cost_at", "forward", "forward_normalized", "init_dp_table", "input_gradients",
    "logsumexp3", "materialize_costs", "new_series_batch", "soft_dtw", "softmin",
    "value_and_grad", "workers",
]


def soft_dtw(x, y, gamma: float = 1.0, **kw):
    """Convenience wrapper: loss for raw arrays of shape (L,), (L, D) or (B, L, D)."""
    cfg = SdtwConfig(gamma=gamma, **kw)
    xs, ys = SeriesBatch.from_array(x), SeriesBatch.from_array(y)
    if cfg.normalized:
        return forward_normalized(xs, ys, cfg)
    return forward(xs, ys, cfg)[0]
