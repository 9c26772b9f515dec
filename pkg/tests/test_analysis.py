import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabiqd.analysis import (
    FitError,
    Partition,
    ScanRecord,
    default_grid,
    discord_scan,
    eigenstate_discords,
    locate_extremum,
    model_at,
    partition_state,
    point_seed,
    power_law_fit,
    qubit_thermal_state,
    record_extremum,
    reduced_qubit_state,
    spectrum_scan,
)
from rabiqd.discord import quantum_discord
from rabiqd.model import TAU_C, ModelParams, solve, thermal_state
from rabiqd.optimizer import OptimizerConfig
from rabiqd.statespace import DensityMatrix, partial_trace

FAST = OptimizerConfig(n_hops=4, n_restarts=2, local_method="auto")


def test_default_grid():
    g = default_grid()
    assert g.size == 60 and g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(2.0)
    assert np.all(np.diff(g) > 0)


def test_point_seed_distinct_and_stable():
    seeds = [point_seed(0, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert point_seed(0, 3) == point_seed(0, 3) != point_seed(1, 3)


@pytest.mark.parametrize("N", [2, 3])
def test_qubit_state_matches_full_partial_trace(N):
    p = ModelParams.homogeneous(N, 0.6, n_max=12)
    full = thermal_state(solve(p), 0.4)
    ref = partial_trace(DensityMatrix(full.matrix, full.dims), "B").matrix
    np.testing.assert_allclose(qubit_thermal_state(p, 0.4), ref, atol=1e-12)


def test_symmetric_multiplet_state_is_dicke_state():
    p = ModelParams.homogeneous(2, 0.5, n_max=10)
    rho = qubit_thermal_state(p, 0.3, "symmetric")
    # support lies in the triplet: the singlet has zero weight
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert abs(singlet @ rho @ singlet) < 1e-14
    assert abs(np.trace(rho) - 1) < 1e-12
    with pytest.raises(ValueError):
        qubit_thermal_state(p, 0.3, "some")


def test_reduced_state_dims():
    rho = reduced_qubit_state(ModelParams.homogeneous(3, 0.4, n_max=8), 0.2)
    assert rho.dims == (4, 2)
    with pytest.raises(ValueError):
        reduced_qubit_state(ModelParams.homogeneous(1, 0.4, n_max=8), 0.2)


def test_zero_coupling_zero_temperature_no_discord():
    for N in (1, 2):
        p = model_at(ModelParams.homogeneous(N, 0.0, n_max=2), 0.0)
        rho = partition_state(p, 0.0, Partition.FIELD_VS_QUBITS)
        assert quantum_discord(rho, FAST).value < 1e-9


def test_low_temperature_insensitivity():
    p = model_at(ModelParams.homogeneous(1, 0.0, n_max=2), 0.5)
    vals = [quantum_discord(partition_state(p, t * TAU_C, "field"), FAST).value for t in (1e-4, 1e-2, 1e-1)]
    assert np.ptp(vals) < 1e-3


def test_scan_record_validation():
    with pytest.raises(ValueError):
        ScanRecord(1, 0.1, [0.1, 0.1], [0, 0], np.zeros(2, bool))
    with pytest.raises(ValueError):
        ScanRecord(1, 0.1, [0.1, 0.2], [0], np.zeros(1, bool))


def test_discord_scan_deterministic_and_shaped():
    tpl = ModelParams.homogeneous(1, 0.0, n_max=2)
    grid = np.array([0.05, 0.5, 1.0, 2.0])
    a = discord_scan(tpl, TAU_C, grid, "field", FAST)
    b = discord_scan(tpl, TAU_C, grid, "field", FAST)
    np.testing.assert_array_equal(a.discord, b.discord)
    assert a.discord[1] > a.discord[0] and a.discord[1] > a.discord[-1]
    assert a.metadata["cutoff"][0] == 31  # ceil(0.05**2 + 10 sqrt(1.0025) + 20)
    with pytest.raises(ValueError):
        discord_scan(tpl, TAU_C, [], "field", FAST)
    with pytest.raises(ValueError):
        discord_scan(tpl, TAU_C, grid, "one-vs-rest", FAST)


def test_warm_start_scan_runs():
    tpl = ModelParams.homogeneous(2, 0.0, n_max=2)
    rec = discord_scan(tpl, TAU_C, [0.2, 0.4], "one-vs-rest", FAST, warm_start=True)
    assert rec.discord.shape == (2,) and rec.metadata["warm_start"]


def test_parabola_vertex():
    x = np.linspace(0, 2, 11)
    y = -3 * (x - 0.77) ** 2 + 1.5
    e = locate_extremum(x, y)
    assert abs(e.g_star - 0.77) < 1e-10 and abs(e.value - 1.5) < 1e-10
    e = locate_extremum(x, -y, "min")
    assert abs(e.g_star - 0.77) < 1e-10


def test_parabola_vertex_uneven_grid():
    x = np.geomspace(0.1, 3, 17)
    y = (x - 1.3) ** 2
    assert abs(locate_extremum(x, y, "min").g_star - 1.3) < 1e-10


def test_boundary_and_flat():
    x = np.linspace(0, 1, 5)
    e = locate_extremum(x, x)
    assert e.boundary and e.index == 4 and e.g_star == 1.0
    f = locate_extremum(x, np.ones(5))
    assert f.degenerate and f.g_star == 0.5
    with pytest.raises(ValueError):
        locate_extremum(x[:2], x[:2])


def test_record_extremum():
    rec = ScanRecord(1, 0.1, [0.1, 0.2, 0.3], [0.1, 0.5, 0.2], np.zeros(3, bool))
    assert record_extremum(rec).index == 1


def test_power_law_exact():
    x = np.array([1.0, 2, 3, 4])
    f = power_law_fit(x, 2 * x**-0.5)
    assert f.exponent == pytest.approx(-0.5, abs=1e-12)
    assert f.prefactor == pytest.approx(2, abs=1e-12)
    assert f.r_squared == pytest.approx(1.0) and f.n_points == 4
    np.testing.assert_allclose(f(x), 2 * x**-0.5)
    two = power_law_fit([1, 3], [5, 2])
    assert two.r_squared == pytest.approx(1.0)


def test_power_law_errors():
    with pytest.raises(FitError):
        power_law_fit([1, 2], [1, -1])
    with pytest.raises(FitError):
        power_law_fit([1], [1])
    with pytest.raises(FitError):
        power_law_fit([1, 2], [1, 2, 3])
    with pytest.raises(FitError):
        power_law_fit([2, 2], [1, 3])


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.1, 10), min_size=3, max_size=8, unique=True),
    st.floats(-2, 2),
    st.floats(0.5, 5),
    st.floats(0.1, 10),
    st.integers(0, 2**31),
)
def test_power_law_scale_covariance(xs, k, a, c, seed):
    x = np.array(xs)
    noise = np.exp(np.random.default_rng(seed).normal(0, 0.1, x.size))
    y = a * x**k * noise
    f1, f2 = power_law_fit(x, y), power_law_fit(c * x, y)
    assert abs(f1.exponent - f2.exponent) < 1e-10
    assert abs(f1.r_squared - f2.r_squared) < 1e-10
    assert abs(f2.prefactor - f1.prefactor * c ** (-f1.exponent)) < 1e-10 * max(1, f1.prefactor * c ** (-f1.exponent))
    assert 0 <= f1.r_squared <= 1


def test_spectrum_scan_degeneracy_at_strong_coupling():
    grid = np.geomspace(0.01, 2.0, 60)
    rows = spectrum_scan(ModelParams.homogeneous(1, 0.0, n_max=2), grid, n_levels=3)
    gap = rows[:, 1]
    tail = gap[grid > 1.5]
    assert np.all(np.diff(tail) < 0) and tail[0] < 2e-2 and tail[-1] < 1e-3
    assert rows.shape == (60, 3)


def test_spectrum_decoupled_closed_form():
    rows = spectrum_scan(ModelParams.homogeneous(1, 0.0, n_max=2), [0.0], n_levels=4)
    np.testing.assert_allclose(rows[0], [0, 1, 1, 2], atol=1e-12)


def test_jc_limit_eigenstate_discords():
    p = model_at(ModelParams.homogeneous(1, 0.0, n_max=2), 0.01)
    q0, q1 = eigenstate_discords(p, [0, 1], FAST)
    assert q0 <= 0.01 and q1 >= 0.99
