import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabiqd.optimizer import (
    OptimizationError,
    OptimizerConfig,
    basin_hop,
    bfgs,
    central_difference,
    conjugate_gradient,
    local_minimize,
)


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def rosenbrock_grad(x):
    return np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_quadratic_bowl(c, x0):
    c = np.array(c)
    res = local_minimize(lambda x: float(np.sum((x - c) ** 2)), x0, jac=lambda x: 2 * (x - c))
    np.testing.assert_allclose(res.x, c, atol=1e-6)
    assert res.value <= np.sum((np.array(x0) - c) ** 2) + 1e-12


def test_rosenbrock_cg():
    cfg = OptimizerConfig(local_max_iters=20000, local_tolerance=1e-8)
    res = conjugate_gradient(rosenbrock, [-1.2, 1.0], cfg, rosenbrock_grad)
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-4)


def test_rosenbrock_bfgs_finite_differences():
    cfg = OptimizerConfig(local_max_iters=500, local_tolerance=1e-7)
    res = bfgs(rosenbrock, [-1.2, 1.0], cfg)
    np.testing.assert_allclose(res.x, [1, 1], atol=1e-4)


def test_critical_point_returns_immediately():
    res = local_minimize(lambda x: float(x @ x), np.zeros(2), jac=lambda x: 2 * x)
    assert res.iterations == 0 and res.value == 0.0 and res.converged


def test_nonfinite_objective():
    def f(x):
        return math.inf if x[0] > 0.5 else float((x[0] - 2) ** 2)

    # the first step lands beyond 0.5 and must surface an error with the last iterate
    with pytest.raises(OptimizationError) as exc:
        local_minimize(f, [0.0], jac=lambda x: np.array([2 * (x[0] - 2)]))
    assert exc.value.x[0] == 0.0
    with pytest.raises(OptimizationError):
        local_minimize(lambda x: math.nan, [0.0])


def test_central_difference():
    g = central_difference(lambda x: float(np.sin(x[0]) * x[1] ** 2), np.array([0.3, 2.0]))
    np.testing.assert_allclose(g, [np.cos(0.3) * 4, 2 * np.sin(0.3) * 2], atol=1e-8)


def test_basin_hop_convex_matches_local():
    c = np.array([0.4, -1.3])
    fun = lambda x: float(np.sum((x - c) ** 2))  # noqa: E731
    out = basin_hop(fun, np.zeros(2), OptimizerConfig(n_hops=5, n_restarts=2))
    loc = local_minimize(fun, np.zeros(2))
    np.testing.assert_allclose(out.best_point, loc.x, atol=1e-6)
    assert abs(out.best_value - loc.value) < 1e-12


def test_basin_hop_multiwell_against_grid():
    fun = lambda x: float(np.cos(3 * x[0]) + 0.1 * x[0] ** 2)  # noqa: E731
    xs = np.arange(-10, 10, 1e-4)
    oracle = np.min(np.cos(3 * xs) + 0.1 * xs**2)
    cfg = OptimizerConfig(n_hops=50, hop_scale=1.5, n_restarts=4, init_range=(-8.0, 8.0))
    out = basin_hop(fun, np.array([5.0]), cfg)
    assert abs(out.best_value - oracle) < 1e-6


def test_basin_hop_deterministic_and_monotone():
    fun = lambda x: float(np.sum(np.cos(3 * x) + 0.1 * x**2))  # noqa: E731
    cfg = OptimizerConfig(n_hops=10, n_restarts=3, master_seed=123)
    a = basin_hop(fun, np.ones(2), cfg)
    b = basin_hop(fun, np.ones(2), cfg)
    assert a.best_value == b.best_value
    np.testing.assert_array_equal(a.best_point, b.best_point)
    assert a.restart_values == b.restart_values and a.best_curve == b.best_curve
    assert np.all(np.diff(a.best_curve) <= 0)
    assert a.best_value <= min(a.restart_values)


def test_parallel_mapper_agrees():
    from concurrent.futures import ThreadPoolExecutor

    fun = lambda x: float(np.sum(np.cos(3 * x) + 0.1 * x**2))  # noqa: E731
    cfg = OptimizerConfig(n_hops=8, n_restarts=4, master_seed=7)
    serial = basin_hop(fun, np.zeros(2), cfg)
    with ThreadPoolExecutor(4) as ex:
        par = basin_hop(fun, np.zeros(2), cfg, mapper=ex.map)
    assert serial.best_value == par.best_value
    assert serial.restart_values == par.restart_values


def test_patience_stops_early():
    fun = lambda x: float(x @ x)  # noqa: E731
    out = basin_hop(fun, np.ones(2), OptimizerConfig(n_hops=50, n_restarts=1, patience=3))
    assert out.hops_taken < 50
    curve = out.best_curve
    assert all(v == curve[-1] for v in curve[-3:])


def test_failed_hops_do_not_abort():
    def f(x):
        return math.nan if abs(x[0]) > 3 else float((x[0] - 1) ** 2)

    out = basin_hop(f, np.array([0.0]), OptimizerConfig(n_hops=20, hop_scale=4.0, n_restarts=2, init_range=(-1, 1)))
    assert abs(out.best_point[0] - 1) < 1e-6


@pytest.mark.parametrize(
    "bad",
    [dict(n_hops=0), dict(n_restarts=0), dict(hop_scale=0.0), dict(local_tolerance=-1.0), dict(local_method="newton"), dict(patience=0)],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        OptimizerConfig(**bad)
