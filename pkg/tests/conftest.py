import numpy as np
import pytest

from sdtw import SeriesBatch


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def batch(arr, dtype=np.float64):
    return SeriesBatch(np.asarray(arr, dtype=dtype))


def random_pair(rng, b, n, m, d, scale=1.0, dtype=np.float64):
    x = scale * rng.standard_normal((b, n, d))
    y = scale * rng.standard_normal((b, m, d))
    return batch(x, dtype), batch(y, dtype)


# acceptance criteria report one line each; collected here so the summary
# shows them even when output capture is on
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
