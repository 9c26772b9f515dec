"""Multiqubit Rabi (Dicke) Hamiltonian, parity, spectra and Gibbs states.

Energies are in units of a reference frequency ``omega`` (hbar = 1) and
temperatures are the dimensionless ``tau = k_B T / (hbar omega)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .statespace import (
    Basis,
    DensityMatrix,
    SpaceDescriptor,
    build_operators,
    build_space,
    multiplet_multiplicities,
    spin_matrices,
    embed_qubit,
)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.diag([1.0, -1.0])

# CODATA 2018 exact values (SI)
BOLTZMANN = 1.380649e-23
PLANCK = 6.62607015e-34
HBAR = PLANCK / (2 * math.pi)


def reduced_temperature(temperature_mK: float, frequency_GHz: float) -> float:
    """``k_B T / (hbar omega)`` for ``T`` in mK and ``omega/2pi`` in GHz."""
    return BOLTZMANN * temperature_mK * 1e-3 / (HBAR * 2 * math.pi * frequency_GHz * 1e9)


# dropped from thermal ensembles; the trace error stays far below 1e-12
NEGLIGIBLE_POPULATION = 1e-18

T_C_MK = 19.0
OMEGA_GHZ = 8.0
TAU_C = reduced_temperature(T_C_MK, OMEGA_GHZ)


class ModelError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class QubitConvention(str, enum.Enum):
    HALF_SIGMA_Z = "half"  # (omega_q / 2) sigma_z
    FULL_SIGMA_Z = "full"  # omega_q sigma_z

    @property
    def factor(self) -> float:
        return 0.5 if self is QubitConvention.HALF_SIGMA_Z else 1.0


@dataclass(frozen=True)
class ModelParams:
    space: SpaceDescriptor
    omega_r: float = 1.0
    omega_q: tuple[float, ...] = ()
    g: tuple[float, ...] = ()
    convention: QubitConvention = QubitConvention.HALF_SIGMA_Z

    def __post_init__(self):
        N = self.space.qubit_count
        object.__setattr__(self, "omega_q", tuple(float(x) for x in self.omega_q))
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        object.__setattr__(self, "convention", QubitConvention(self.convention))
        if len(self.omega_q) != N or len(self.g) != N:
            raise ModelError(f"need {N} qubit frequencies and couplings")
        if self.omega_r <= 0 or any(w <= 0 for w in self.omega_q):
            raise ModelError("frequencies must be strictly positive")
        if any(x < 0 for x in self.g):
            raise ModelError("couplings must be non-negative")
        if self.space.basis is Basis.DICKE and not self.is_homogeneous:
            raise ModelError("the Dicke basis requires identical qubit frequencies and couplings")

    @classmethod
    def homogeneous(
        cls,
        N: int,
        g: float,
        n_max: int | None = None,
        omega_r: float = 1.0,
        omega_q: float = 1.0,
        basis: Basis | str = Basis.FULL_TENSOR,
        convention: QubitConvention | str = QubitConvention.HALF_SIGMA_Z,
    ) -> "ModelParams":
        if n_max is None:
            n_max = initial_cutoff(N, g, omega_r)
        space = build_space(N, n_max, basis)
        return cls(space, omega_r, (omega_q,) * N, (g,) * N, convention)

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.omega_q)) <= 1 and len(set(self.g)) <= 1

    @property
    def N(self) -> int:
        return self.space.qubit_count

    def with_cutoff(self, n_max: int) -> "ModelParams":
        return replace(self, space=build_space(self.N, n_max, self.space.basis))

    def with_coupling(self, g: float) -> "ModelParams":
        return replace(self, g=(g,) * self.N)

    def with_basis(self, basis: Basis | str) -> "ModelParams":
        return replace(self, space=build_space(self.N, self.space.fock_cutoff, basis))

    def scaled(self, omega: float) -> "ModelParams":
        """All frequencies multiplied by ``omega``; couplings untouched."""
        return replace(
            self, omega_r=self.omega_r * omega, omega_q=tuple(w * omega for w in self.omega_q)
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    energies: np.ndarray
    states: np.ndarray
    params: ModelParams | None = field(default=None, repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        if self.params is None:
            return (self.states.shape[0], 1)
        return self.params.space.dims


@dataclass(frozen=True)
class ThermalConfig:
    temperature: float
    level_cutoff: int | None = None
    degeneracy_tol: float = 1e-9

    def __post_init__(self):
        if not self.temperature >= 0:
            raise ModelError(f"temperature must be >= 0, got {self.temperature}")
        if self.level_cutoff is not None and self.level_cutoff < 1:
            raise ModelError("level_cutoff must be positive")


def initial_cutoff(N: int, g: float, omega_r: float = 1.0) -> int:
    """First Fock cutoff tried by :func:`converge_cutoff`."""
    alpha2 = (N * g / omega_r) ** 2
    return int(math.ceil(alpha2 + 10 * math.sqrt(alpha2 + 1) + 20))


def build_hamiltonian(params: ModelParams) -> np.ndarray:
    """Real symmetric Hamiltonian matrix in the ``field (x) qubits`` basis.

    Assembled from Kronecker products of the small factor matrices; the
    result equals the sum of the embedded :class:`OperatorSet` terms.
    """
    space = params.space
    n_max, dq, N = space.fock_cutoff, space.dim_qubits, params.N
    c = params.convention.factor
    x_f = np.diag(np.sqrt(np.arange(1.0, n_max)), k=1)
    x_f = x_f + x_f.T
    H = params.omega_r * np.kron(np.diag(np.arange(float(n_max))), np.eye(dq))
    if space.basis is Basis.DICKE:
        jx, _, jz, _ = spin_matrices(N / 2)
        H += c * params.omega_q[0] * np.kron(np.eye(n_max), 2 * jz.real)
        H += params.g[0] * np.kron(x_f, 2 * jx.real)
    else:
        sz_q = np.zeros(dq)
        sx_q = np.zeros((dq, dq))
        for l in range(N):
            sz_q += c * params.omega_q[l] * np.real(np.diag(embed_qubit(SIGMA_Z, l, N)))
            if params.g[l]:
                sx_q += params.g[l] * embed_qubit(SIGMA_X, l, N).real
        H += np.kron(np.eye(n_max), np.diag(sz_q))
        H += np.kron(x_f, sx_q)
    return np.ascontiguousarray(H)


def parity_operator(space: SpaceDescriptor) -> np.ndarray:
    """Diagonal ``exp(-i pi [sum (sigma_z + 1)/2 + a^dag a])`` as a real matrix."""
    N = space.qubit_count
    if space.basis is Basis.DICKE:
        exc = np.arange(N + 1)  # m + N/2 excited qubits for m = -N/2..N/2
    else:
        bits = (np.arange(2**N)[:, None] >> np.arange(N)) & 1
        exc = N - bits.sum(axis=1)  # bit 0 of a factor index means |e>
    n = np.arange(space.fock_cutoff)
    return np.diag((-1.0) ** ((n[:, None] + exc[None, :]).reshape(-1) % 2))


def eigendecompose(H: np.ndarray, params: ModelParams | None = None, herm_tol: float = 1e-10) -> Spectrum:
    H = np.asarray(H)
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if np.max(np.abs(H - H.conj().T), initial=0.0) > herm_tol * scale:
        raise ModelError("matrix is not Hermitian")
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    w, v = scipy.linalg.eigh(H, driver="evd")
    for x in (w, v):
        x.setflags(write=False)
    return Spectrum(w, v, params)


def solve(params: ModelParams) -> Spectrum:
    return eigendecompose(build_hamiltonian(params), params)


def thermal_populations(
    energies: np.ndarray,
    tau: float,
    level_cutoff: int | None = None,
    degeneracy_tol: float = 1e-9,
) -> np.ndarray:
    """Boltzmann weights of ascending ``energies`` (zero beyond ``level_cutoff``)."""
    if not tau >= 0:
        raise ModelError(f"temperature must be >= 0, got {tau}")
    e = np.asarray(energies, dtype=float)
    m = len(e) if level_cutoff is None else min(level_cutoff, len(e))
    p = np.zeros(len(e))
    shifted = e[:m] - e[0]
    if tau == 0:
        p[:m] = shifted <= degeneracy_tol
    else:
        p[:m] = np.exp(-shifted / tau)
    return p / p.sum()


def thermal_state(spec: Spectrum, cfg: ThermalConfig | float) -> DensityMatrix:
    if not isinstance(cfg, ThermalConfig):
        cfg = ThermalConfig(float(cfg))
    p = thermal_populations(spec.energies, cfg.temperature, cfg.level_cutoff, cfg.degeneracy_tol)
    p[p < NEGLIGIBLE_POPULATION] = 0.0
    return DensityMatrix.from_ensemble(p, spec.states, spec.dims)


def eigenstate(spec: Spectrum, k: int) -> DensityMatrix:
    return DensityMatrix.pure(spec.states[:, k], spec.dims)


def converge_cutoff(
    params: ModelParams, n_levels: int = 5, tol: float = 1e-8, max_doublings: int = 4
) -> int:
    """Smallest cutoff of the doubling sequence whose low spectrum is stable."""
    if tol <= 0:
        raise ModelError("tol must be positive")
    n = initial_cutoff(params.N, max(params.g, default=0.0), params.omega_r)
    low = np.linalg.eigvalsh(build_hamiltonian(params.with_cutoff(n)))[:n_levels]
    for _ in range(max_doublings):
        nxt = np.linalg.eigvalsh(build_hamiltonian(params.with_cutoff(2 * n)))[:n_levels]
        if np.max(np.abs(nxt - low)) < tol:
            return n
        n, low = 2 * n, nxt
    raise ConvergenceError(f"low spectrum not converged after {max_doublings} doublings (n_max={n})")


# -- total-spin decomposition ------------------------------------------------

def multiplet_blocks(params: ModelParams) -> list[tuple[float, int, ModelParams]]:
    """Split a homogeneous model into its total-spin blocks.

    With identical couplings the Hamiltonian only involves collective spin
    operators, so it is a direct sum over multiplets ``j`` (each repeated
    ``multiplicity`` times) of Dicke Hamiltonians with ``2j`` effective qubits.
    Returns ``(j, multiplicity, block_params)`` from the largest ``j`` down.
    """
    if not params.is_homogeneous:
        raise ModelError("multiplet decomposition requires a homogeneous model")
    N, n_max = params.N, params.space.fock_cutoff
    if N == 0:
        return [(0.0, 1, params)]
    out = []
    for j, mult in multiplet_multiplicities(N).items():
        n_eff = int(round(2 * j))
        basis = Basis.DICKE if n_eff else Basis.FULL_TENSOR
        block = ModelParams(
            build_space(n_eff, n_max, basis),
            params.omega_r,
            params.omega_q[:1] * n_eff,
            params.g[:1] * n_eff,
            params.convention,
        )
        out.append((j, mult, block))
    return out


def block_energies(params: ModelParams) -> list[tuple[int, np.ndarray]]:
    """``(multiplicity, ascending energies)`` for each total-spin block."""
    return [
        (mult, np.linalg.eigvalsh(build_hamiltonian(block)))
        for _, mult, block in multiplet_blocks(params)
    ]


def full_energies(params: ModelParams, repeat: bool = True, blocks=None) -> np.ndarray:
    """Whole ``2**N``-qubit spectrum from the spin blocks.

    ``repeat=False`` lists each block's levels once, ignoring the
    multiplicity of equivalent multiplets.  Precomputed ``blocks`` from
    :func:`block_energies` may be passed in.
    """
    blocks = block_energies(params) if blocks is None else blocks
    parts = [np.repeat(e, mult if repeat else 1) for mult, e in blocks]
    return np.sort(np.concatenate(parts))
