import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabiqd.model import (
    TAU_C,
    ConvergenceError,
    ModelError,
    ModelParams,
    ThermalConfig,
    build_hamiltonian,
    converge_cutoff,
    eigendecompose,
    full_energies,
    initial_cutoff,
    multiplet_blocks,
    parity_operator,
    reduced_temperature,
    solve,
    thermal_populations,
    thermal_state,
)
from rabiqd.statespace import Basis, build_space


def test_decoupled_single_qubit_levels():
    p = ModelParams.homogeneous(1, 0.0, n_max=2)
    np.testing.assert_allclose(np.linalg.eigvalsh(build_hamiltonian(p)), [-0.5, 0.5, 0.5, 1.5])


def test_full_convention_doubles_qubit_term():
    p = ModelParams.homogeneous(1, 0.0, n_max=2, convention="full")
    np.testing.assert_allclose(np.linalg.eigvalsh(build_hamiltonian(p)), [-1, 0, 1, 2])


def test_deep_strong_quasi_degeneracy():
    p = ModelParams.homogeneous(1, 2.0, n_max=80)
    e = solve(p).energies
    assert e[1] - e[0] < 1e-3


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 3),
    st.integers(2, 6),
    st.lists(st.floats(0.0, 2.0), min_size=3, max_size=3),
    st.lists(st.floats(0.1, 3.0), min_size=3, max_size=3),
    st.floats(0.1, 3.0),
    st.sampled_from(["half", "full"]),
)
def test_parity_commutes(N, n_max, gs, wq, wr, conv):
    p = ModelParams(build_space(N, n_max), wr, wq[:N], gs[:N], conv)
    H = build_hamiltonian(p)
    P = parity_operator(p.space)
    assert np.max(np.abs(H @ P - P @ H)) < 1e-10
    np.testing.assert_array_equal(P @ P, np.eye(P.shape[0]))


def test_parity_entries_single_qubit():
    P = np.diag(parity_operator(build_space(1, 2)))
    # |n> (x) |q>, q = e (sz=+1) then g (sz=-1): sign (-1)^(n + (sz+1)/2)
    np.testing.assert_array_equal(P, [-1, 1, 1, -1])


def test_parity_trace_field_only():
    for n in range(2, 7):
        P = parity_operator(build_space(0, n))
        assert np.trace(P) == sum((-1) ** k for k in range(n))


def test_dicke_parity_commutes():
    p = ModelParams.homogeneous(3, 0.7, n_max=12, basis="dicke")
    H, P = build_hamiltonian(p), parity_operator(p.space)
    assert np.max(np.abs(H @ P - P @ H)) < 1e-10


def test_hamiltonian_real_symmetric():
    p = ModelParams(build_space(2, 5), 1.1, (0.9, 1.3), (0.2, 0.5))
    H = build_hamiltonian(p)
    assert H.dtype == np.float64
    np.testing.assert_array_equal(H, H.T)


def test_dicke_needs_homogeneous():
    with pytest.raises(ModelError):
        ModelParams(build_space(2, 4, "dicke"), 1.0, (1.0, 1.1), (0.1, 0.1))


@pytest.mark.parametrize("bad", [dict(omega_r=0.0), dict(omega_q=(-1.0,)), dict(g=(-0.1,)), dict(g=(0.1, 0.2))])
def test_param_validation(bad):
    kw = dict(space=build_space(1, 3), omega_r=1.0, omega_q=(1.0,), g=(0.1,))
    kw.update(bad)
    with pytest.raises(ModelError):
        ModelParams(**kw)


def test_eigendecompose_diag():
    s = eigendecompose(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(s.energies, [1, 2, 3])


def test_eigendecompose_rejects_nonhermitian():
    with pytest.raises(ModelError):
        eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("N, g, basis", [(1, 0.3, "full"), (2, 0.8, "full"), (3, 0.5, "dicke")])
def test_spectrum_invariants(N, g, basis):
    p = ModelParams.homogeneous(N, g, n_max=15, basis=basis)
    H = build_hamiltonian(p)
    s = solve(p)
    V, E = s.states, s.energies
    assert np.all(np.diff(E) >= 0)
    np.testing.assert_allclose(V.T @ V, np.eye(len(E)), atol=1e-10)
    norm = np.linalg.norm(H, 2)
    assert np.linalg.norm(H @ V - V * E) < 1e-9 * norm
    assert np.linalg.norm((V * E) @ V.T - H) < 1e-9 * norm


def test_jaynes_cummings_doublet():
    g = 0.05
    e = solve(ModelParams.homogeneous(1, g, n_max=30)).energies
    # ground -1/2, first doublet 1/2 -+ g (JC), small Bloch-Siegert shift
    assert abs((e[2] - e[1]) - 2 * g) < 5e-3
    assert abs(0.5 * (e[1] + e[2]) - 0.5) < 5e-3


def test_jaynes_cummings_eigenvectors():
    for g in (0.01, 0.03):
        s = solve(ModelParams.homogeneous(1, g, n_max=30))
        # |e,0> is index 0, |g,1> is index 3 in field (x) qubit ordering
        plus = np.zeros(60); plus[[0, 3]] = 1 / np.sqrt(2)
        minus = np.zeros(60); minus[0], minus[3] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        ov = [max(abs(s.states[:, k] @ plus), abs(s.states[:, k] @ minus)) for k in (1, 2)]
        assert min(ov) >= 0.999


def test_reduced_temperature():
    assert abs(TAU_C - 0.0495) < 1e-3
    # independent evaluation: k_B T / (h f)
    assert math.isclose(TAU_C, 1.380649e-23 * 19e-3 / (6.62607015e-34 * 8e9), rel_tol=1e-12)
    assert reduced_temperature(0.0, 8.0) == 0.0


def test_thermal_ground_state():
    s = solve(ModelParams.homogeneous(1, 0.2, n_max=20))
    rho = thermal_state(s, 0.0)
    psi = s.states[:, 0]
    np.testing.assert_allclose(rho.matrix, np.outer(psi, psi), atol=1e-14)


def test_thermal_degenerate_ground_mixture():
    s = eigendecompose(np.diag([0.0, 0.0, 1.0]))
    p = thermal_populations(s.energies, 0.0)
    np.testing.assert_allclose(p, [0.5, 0.5, 0])


def test_thermal_high_temperature_level_cutoff():
    s = solve(ModelParams.homogeneous(1, 0.2, n_max=20))
    p = thermal_populations(s.energies, 1e9, level_cutoff=5)
    np.testing.assert_allclose(p[:5], 0.2, atol=1e-8)
    assert not p[5:].any()


def test_negative_temperature():
    with pytest.raises(ModelError):
        ThermalConfig(-1.0)
    with pytest.raises(ModelError):
        thermal_populations(np.zeros(2), -0.1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(0.0, 1.5), st.integers(1, 2))
def test_populations_monotone_and_normalised(tau, g, N):
    s = solve(ModelParams.homogeneous(N, g, n_max=10))
    rho = thermal_state(s, tau)
    assert abs(np.trace(rho.matrix).real - 1) < 1e-12
    p = thermal_populations(s.energies, tau)
    assert np.all(np.diff(p) <= 1e-15)


@pytest.mark.parametrize("tau", [0.3, 1.0, 2.5])
def test_decoupled_gibbs_factorises(tau):
    n = 40
    p = ModelParams.homogeneous(2, 0.0, n_max=n)
    rho = thermal_state(solve(p), tau).matrix
    field = np.exp(-np.arange(n) / tau)
    field /= field.sum()
    qubit = np.array([np.exp(-0.5 / tau), np.exp(0.5 / tau)])
    qubit /= qubit.sum()
    expect = np.kron(field, np.kron(qubit, qubit))
    np.testing.assert_allclose(np.diag(rho).real, expect, atol=1e-12)


def test_initial_cutoff_formula():
    assert initial_cutoff(1, 0.0) == 30
    a2 = (3 * 1.0) ** 2
    assert initial_cutoff(3, 1.0) == math.ceil(a2 + 10 * math.sqrt(a2 + 1) + 20)


def test_converge_cutoff_decoupled_returns_start():
    p = ModelParams.homogeneous(2, 0.0, n_max=2)
    assert converge_cutoff(p) == initial_cutoff(2, 0.0)


def test_converge_cutoff_strong_coupling():
    p = ModelParams.homogeneous(1, 1.5, n_max=2)
    n = converge_cutoff(p, n_levels=5, tol=1e-8)
    low = np.linalg.eigvalsh(build_hamiltonian(p.with_cutoff(n)))[:5]
    ref = np.linalg.eigvalsh(build_hamiltonian(p.with_cutoff(4 * n)))[:5]
    assert np.max(np.abs(low - ref)) < 1e-8


def test_converge_cutoff_population_tail():
    p = ModelParams.homogeneous(3, 1.0, n_max=2, basis="dicke")
    n = converge_cutoff(p)
    e = solve(p.with_cutoff(n)).energies
    pops = thermal_populations(e, 10 * TAU_C)
    m = int(np.searchsorted(np.cumsum(pops), 0.9999)) + 1
    ref = np.linalg.eigvalsh(build_hamiltonian(p.with_cutoff(2 * n)))[:m]
    assert m < len(e) // 2
    np.testing.assert_allclose(e[:m], ref, atol=1e-8)


def test_converge_cutoff_failure():
    p = ModelParams.homogeneous(1, 1.5, n_max=2)
    with pytest.raises(ConvergenceError):
        converge_cutoff(p, tol=1e-30, max_doublings=1)
    with pytest.raises(ModelError):
        converge_cutoff(p, tol=0)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_multiplet_spectrum_equals_full(N):
    p = ModelParams.homogeneous(N, 0.4, n_max=8)
    ref = np.linalg.eigvalsh(build_hamiltonian(p))
    np.testing.assert_allclose(full_energies(p), ref, atol=1e-10)
    top = multiplet_blocks(p)[0][2]
    assert top.space.basis is Basis.DICKE and top.N == N


def test_dicke_lowest_levels_match_full():
    p = ModelParams.homogeneous(3, 0.6, n_max=20)
    full = np.linalg.eigvalsh(build_hamiltonian(p))
    dicke = np.linalg.eigvalsh(build_hamiltonian(p.with_basis("dicke")))
    np.testing.assert_allclose(dicke[:2], full[:2], atol=1e-10)


@pytest.mark.parametrize("N, basis", [(0, "full"), (1, "full"), (3, "full"), (2, "dicke"), (4, "dicke")])
def test_hamiltonian_matches_operator_sum(N, basis):
    from rabiqd.statespace import build_operators

    wq = tuple(np.linspace(0.8, 1.2, N)) if basis == "full" else (1.1,) * N
    gs = tuple(np.linspace(0.1, 0.6, N)) if basis == "full" else (0.4,) * N
    p = ModelParams(build_space(N, 5, basis), 0.9, wq, gs)
    ops = build_operators(p.space)
    x = ops.annihilation + ops.creation
    if basis == "dicke":
        ref = 0.9 * ops.number + 0.5 * wq[0] * ops.sz_total + gs[0] * ops.sx_total @ x
    else:
        ref = 0.9 * ops.number
        for l in range(N):
            ref = ref + 0.5 * wq[l] * ops.sigma_z[l] + gs[l] * ops.sigma_x[l] @ x
    np.testing.assert_allclose(build_hamiltonian(p), ref.real, atol=1e-13)
    # parity from the exponent with the operator-set number and sigma_z sums
    exc = (np.real(np.diag(ops.sz_total)) + N) / 2
    expect = np.exp(-1j * np.pi * (np.real(np.diag(ops.number)) + exc)).real
    np.testing.assert_allclose(np.diag(parity_operator(p.space)), expect, atol=1e-12)
