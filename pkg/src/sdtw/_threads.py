"""Worker-count control for the compiled wavefront kernels.

The thread pool is sized once, when numba is first imported. We size it to at
least ``MIN_POOL`` so callers can request more workers than cores (useful for
determinism checks on small machines); the *active* count defaults to the
hardware parallelism.
"""
import contextlib
import logging
import os
import warnings

MIN_POOL = 8
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, MIN_POOL)))
# try OpenMP before TBB; numba's default order probes TBB first
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")

import numba  # noqa: E402

# when OpenMP is missing numba probes TBB and warns if it is too old, then
# falls back to its own work queue, which is all we need
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

log = logging.getLogger(__name__)


def hardware_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


def max_workers() -> int:
    return numba.config.NUMBA_NUM_THREADS


@contextlib.contextmanager
def workers(n: int | None):
    """Run the enclosed kernels with ``n`` active threads (``None``: hardware default)."""
    want = hardware_workers() if n is None else int(n)
    cap = max_workers()
    if want > cap:
        log.warning("requested %d workers, thread pool holds %d", want, cap)
        want = cap
    prev = numba.get_num_threads()
    numba.set_num_threads(min(want, cap))
    try:
        yield want
    finally:
        numba.set_num_threads(prev)
