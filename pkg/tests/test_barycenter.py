import numpy as np
import pytest

from sdtw import ConfigError, SdtwConfig, SeriesBatch, ShapeError, forward
from sdtw.barycenter import (
    AdamState,
    BarycenterProblem,
    barycenter_objective,
    initial_barycenter,
    solve_barycenter,
)
from sdtw.generate import generate
from sdtw.oracle import fd_gradient


def sdtw_pair(a, b, gamma=1.0):
    return forward(SeriesBatch(a[None]), SeriesBatch(b[None]), SdtwConfig(gamma=gamma))[0][0]


def test_single_member_objective(rng):
    x = rng.standard_normal((6, 2))
    value, _ = barycenter_objective(x, BarycenterProblem([x], 6))
    assert value == pytest.approx(sdtw_pair(x, x), rel=1e-14)
    assert value <= 0


def test_zero_weights_rejected(rng):
    xs = [rng.standard_normal((4, 1)) for _ in range(2)]
    with pytest.raises(ConfigError):
        BarycenterProblem(xs, 4, weights=[0.0, 0.0])


@pytest.mark.parametrize("kw", [dict(weights=[1.0, -1.0, 3.0]), dict(weights=[1.0, 1.0]),
                                dict(target_length=0)])
def test_problem_validation(rng, kw):
    xs = [rng.standard_normal((4, 1)) for _ in range(3)]
    args = dict(target_length=4)
    args.update(kw)
    with pytest.raises((ConfigError, ShapeError)):
        BarycenterProblem(xs, **args)


def test_mixed_dims_rejected(rng):
    with pytest.raises(ShapeError):
        BarycenterProblem([np.zeros((3, 1)), np.zeros((3, 2))], 3)


def test_objective_gradient_fd(rng):
    xs = [rng.standard_normal((n, 2)) for n in (3, 4, 4)]
    prob = BarycenterProblem(xs, 3, gamma=0.5)
    z = rng.standard_normal((3, 2))
    _, grad = barycenter_objective(z, prob)
    fd = fd_gradient(lambda v: barycenter_objective(v, prob)[0], z)
    assert np.max(np.abs(grad - fd) / np.maximum(1, np.abs(grad))) < 1e-5


def test_two_identical_members_double(rng):
    x = rng.standard_normal((5, 1))
    z = rng.standard_normal((5, 1))
    _, g1 = barycenter_objective(z, BarycenterProblem([x], 5))
    _, g2 = barycenter_objective(z, BarycenterProblem([x, x], 5))
    np.testing.assert_allclose(g2, 2 * g1, rtol=1e-14)


def test_weighted_linearity(rng):
    xs = [rng.standard_normal((n, 2)) for n in (4, 6, 4)]
    w = np.array([0.5, 2.0, 0.5])
    z = rng.standard_normal((5, 2))
    value, grad = barycenter_objective(z, BarycenterProblem(xs, 5, weights=w))
    parts = [barycenter_objective(z, BarycenterProblem([x], 5)) for x in xs]
    assert value == pytest.approx(sum(wk * v for wk, (v, _) in zip(w, parts)), abs=1e-12)
    np.testing.assert_allclose(grad, sum(wk * g for wk, (_, g) in zip(w, parts)), atol=1e-12)


def test_zero_iterations_returns_member(rng):
    x = rng.standard_normal((7, 3))
    trace = solve_barycenter(BarycenterProblem([x], 7), "member_copy", max_iters=0)
    np.testing.assert_array_equal(trace.final_z.data[0], x)
    assert trace.objective_per_iteration == [pytest.approx(sdtw_pair(x, x), rel=1e-14)]


def test_init_choices(rng):
    xs = [rng.standard_normal((4, 1)) for _ in range(3)]
    prob = BarycenterProblem(xs, 4)
    np.testing.assert_allclose(initial_barycenter(prob), np.mean(xs, axis=0))
    np.testing.assert_array_equal(initial_barycenter(prob, "member_copy", 2), xs[2])
    uneven = BarycenterProblem([np.arange(3.0), np.arange(5.0)], 5)
    np.testing.assert_allclose(initial_barycenter(uneven)[:, 0], [0, 0.5, 1, 1.5, 2])
    with pytest.raises(ConfigError):
        initial_barycenter(uneven, "euclidean_mean")


def test_adam_first_step_is_lr_sized():
    adam = AdamState(lr=0.1)
    p = adam.update(np.zeros(3), np.array([1.0, -4.0, 0.5]))
    np.testing.assert_allclose(p, [-0.1, 0.1, -0.1], rtol=1e-6)
    assert adam.step == 1


def test_best_so_far_nonincreasing():
    data = generate("blockwave", 4, 32, noise=0.05, seed=3)
    trace = solve_barycenter(BarycenterProblem(list(data), 32), max_iters=20, lr=0.05)
    best = trace.best_so_far
    assert np.all(np.diff(best) <= 0)
    assert trace.best_objective == best[-1]


def test_translation_covariance(rng):
    xs = [rng.standard_normal((6, 2)) for _ in range(3)]
    c = np.array([3.0, -1.5])
    z0 = rng.standard_normal((6, 2))
    a = solve_barycenter(BarycenterProblem(xs, 6), z0, max_iters=15, tol=0)
    b = solve_barycenter(BarycenterProblem([x + c for x in xs], 6), z0 + c, max_iters=15, tol=0)
    np.testing.assert_allclose(a.objective_per_iteration, b.objective_per_iteration, rtol=1e-8)
