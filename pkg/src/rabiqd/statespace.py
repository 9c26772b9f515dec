"""Truncated field-qubit Hilbert spaces, elementary operators and density matrices.

Every composite object in the package uses the ordering ``field (x) qubits``.
Within the qubit factor of the full tensor basis, qubit 0 is the most
significant Kronecker factor and the local basis is ``(|e>, |g>)`` so that
``sigma_z = diag(+1, -1)``.  The Dicke (symmetric) basis is indexed by
``m = -j .. j`` with ``j = N/2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np


class DimensionError(ValueError):
    """Raised for inconsistent or invalid Hilbert-space dimensions."""


class Basis(str, enum.Enum):
    FULL_TENSOR = "full"
    DICKE = "dicke"


@dataclass(frozen=True)
class SpaceDescriptor:
    qubit_count: int
    fock_cutoff: int
    basis: Basis = Basis.FULL_TENSOR

    @property
    def dim_qubits(self) -> int:
        if self.basis is Basis.DICKE:
            return self.qubit_count + 1
        return 2**self.qubit_count

    @property
    def dim_total(self) -> int:
        return self.dim_qubits * self.fock_cutoff

    @property
    def dims(self) -> tuple[int, int]:
        return self.fock_cutoff, self.dim_qubits


def build_space(N: int, n_max: int, basis: Basis | str = Basis.FULL_TENSOR) -> SpaceDescriptor:
    basis = Basis(basis)
    if N < 0:
        raise DimensionError(f"qubit count must be >= 0, got {N}")
    if n_max < 2:
        raise DimensionError(f"Fock cutoff must be >= 2, got {n_max}")
    if basis is Basis.DICKE and N < 1:
        raise DimensionError("the Dicke basis needs at least one qubit")
    return SpaceDescriptor(int(N), int(n_max), basis)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# -- angular momentum -------------------------------------------------------

@lru_cache(maxsize=64)
def spin_matrices(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(Jx, Jy, Jz, J+)`` for spin ``j`` in the ``m = -j..j`` ordering."""
    if (2 * j) % 1 or j < 0:
        raise DimensionError(f"invalid spin {j}")
    m = np.arange(-j, j + 1)
    jz = np.diag(m).astype(complex)
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
    up = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(up, k=-1).astype(complex)
    jx = 0.5 * (jp + jp.conj().T)
    jy = -0.5j * (jp - jp.conj().T)
    return tuple(_frozen(x) for x in (jx, jy, jz, jp))


def multiplet_multiplicities(N: int) -> dict[float, int]:
    """Multiplicity of every total-spin multiplet in ``N`` spin-1/2 particles."""
    out = {}
    for k in range(N // 2 + 1):
        j = N / 2 - k
        out[j] = comb(N, k) - (comb(N, k - 1) if k >= 1 else 0)
    return out


def collective_operators_full(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collective ``(Jx, Jz, J+)`` on the ``2**N`` qubit space."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|
    jx = sum(embed_qubit(sx, l, N) for l in range(N)) / 2
    jz = sum(embed_qubit(sz, l, N) for l in range(N)) / 2
    jp = sum(embed_qubit(sp, l, N) for l in range(N))
    return jx, jz, jp


@lru_cache(maxsize=16)
def multiplet_isometries(N: int) -> tuple[tuple[float, tuple[np.ndarray, ...]], ...]:
    """Isometries embedding each spin-``j`` multiplet copy into ``2**N`` qubits.

    Columns follow the ``m = -j..j`` ordering with standard ladder phases, so
    ``W.conj().T @ Jx_full @ W`` equals ``spin_matrices(j)[0]`` for every copy.
    """
    if N < 1:
        raise DimensionError("need at least one qubit")
    _, jz, jp = collective_operators_full(N)
    jm = jp.conj().T
    mz = np.real(np.diag(jz))
    out = []
    for j, mult in multiplet_multiplicities(N).items():
        if mult == 0:
            continue
        idx = np.flatnonzero(np.isclose(mz, j))
        # highest-weight vectors: kernel of J+ inside the m = j eigenspace
        _, s, vh = np.linalg.svd(jp[:, idx])
        rank = int(np.sum(s > 1e-10))
        kernel = vh[rank:].conj().T
        assert kernel.shape[1] == mult
        copies = []
        for c in range(mult):
            top = np.zeros(2**N, dtype=complex)
            top[idx] = kernel[:, c]
            cols = [top]
            m = j
            while m > -j + 1e-9:
                v = jm @ cols[-1] / np.sqrt(j * (j + 1) - m * (m - 1))
                cols.append(v)
                m -= 1
            copies.append(_frozen(np.array(cols[::-1]).T))
        out.append((j, tuple(copies)))
    return tuple(out)


def symmetric_isometry(N: int) -> np.ndarray:
    """Embedding of the Dicke (maximal-``j``) basis into ``2**N`` qubits."""
    j, copies = multiplet_isometries(N)[0]
    assert j == N / 2 and len(copies) == 1
    return copies[0]


# -- operators --------------------------------------------------------------

def embed_qubit(op: np.ndarray, l: int, N: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**l), op), np.eye(2 ** (N - l - 1)))


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Operators of one space, all embedded in ``dim_total``.

    ``sigma_x``/``sigma_z`` hold one matrix per qubit in the full tensor basis;
    in the Dicke basis they are empty and ``jx``/``jz`` carry the collective
    spin instead.  ``sx_total``/``sz_total`` are the qubit sums in both bases.
    """

    space: SpaceDescriptor
    annihilation: np.ndarray
    number: np.ndarray
    sigma_x: tuple[np.ndarray, ...]
    sigma_z: tuple[np.ndarray, ...]
    jx: np.ndarray | None
    jz: np.ndarray | None
    id_field: np.ndarray
    id_qubits: np.ndarray
    sx_total: np.ndarray = field(repr=False)
    sz_total: np.ndarray = field(repr=False)

    @property
    def creation(self) -> np.ndarray:
        return self.annihilation.conj().T


def annihilation_matrix(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max)), k=1).astype(complex)


def build_operators(space: SpaceDescriptor) -> OperatorSet:
    space = build_space(space.qubit_count, space.fock_cutoff, space.basis)
    n_max, dq = space.fock_cutoff, space.dim_qubits
    id_f, id_q = np.eye(n_max, dtype=complex), np.eye(dq, dtype=complex)
    a_f = annihilation_matrix(n_max)
    a = np.kron(a_f, id_q)
    num = np.kron(np.diag(np.arange(n_max)).astype(complex), id_q)
    sx_list: list[np.ndarray] = []
    sz_list: list[np.ndarray] = []
    jx = jz = None
    N = space.qubit_count
    if space.basis is Basis.DICKE:
        jx_q, _, jz_q, _ = spin_matrices(N / 2)
        jx, jz = np.kron(id_f, jx_q), np.kron(id_f, jz_q)
        sx_tot, sz_tot = 2 * jx, 2 * jz
    else:
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sz = np.diag([1.0, -1.0]).astype(complex)
        for l in range(N):
            sx_list.append(np.kron(id_f, embed_qubit(sx, l, N)))
            sz_list.append(np.kron(id_f, embed_qubit(sz, l, N)))
        zero = np.zeros((space.dim_total,) * 2, dtype=complex)
        sx_tot = sum(sx_list, zero.copy())
        sz_tot = sum(sz_list, zero.copy())
        if jx is None and N:
            jx, jz = sx_tot / 2, sz_tot / 2
    arrays = [a, num, id_f, id_q, sx_tot, sz_tot, *sx_list, *sz_list]
    if jx is not None:
        arrays += [jx, jz]
    for x in arrays:
        _frozen(x)
    return OperatorSet(
        space=space,
        annihilation=a,
        number=num,
        sigma_x=tuple(sx_list),
        sigma_z=tuple(sz_list),
        jx=jx,
        jz=jz,
        id_field=id_f,
        id_qubits=id_q,
        sx_total=sx_tot,
        sz_total=sz_tot,
    )


# -- density matrices -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Bipartite density matrix on ``d_A (x) d_B`` (``A`` is the left factor).

    ``ensemble`` optionally holds an exact decomposition ``(weights, vectors)``
    with ``matrix = vectors @ diag(weights) @ vectors^H``.  Consumers that
    only need the support (entropies, measured conditional states) use it to
    avoid a full eigendecomposition.
    """

    matrix: np.ndarray
    dims: tuple[int, int]
    ensemble: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix)
        d_a, d_b = (int(x) for x in self.dims)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if d_a < 1 or d_b < 1 or d_a * d_b != m.shape[0]:
            raise DimensionError(f"dims {self.dims} do not match matrix size {m.shape[0]}")
        m = np.array(m, dtype=complex)
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", (d_a, d_b))
        if self.ensemble is not None:
            w, v = (np.array(x) for x in self.ensemble)
            object.__setattr__(self, "ensemble", (_frozen(w), _frozen(v)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ensemble(cls, weights, vectors, dims) -> "DensityMatrix":
        w = np.asarray(weights, dtype=float)
        v = np.asarray(vectors, dtype=complex)
        keep = w > 0
        w, v = w[keep], v[:, keep]
        mat = (v * w) @ v.conj().T
        return cls(mat, tuple(dims), (w, v))

    @classmethod
    def pure(cls, psi, dims) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls.from_ensemble([1.0], psi[:, None], dims)

    def factor(self, rank_tol: float = 1e-14) -> np.ndarray:
        """Return ``F`` (columns ``sqrt(w_k) psi_k``) with ``F F^H = matrix``."""
        if self.ensemble is not None:
            w, v = self.ensemble
        else:
            w, v = np.linalg.eigh(self.matrix)
        keep = w > rank_tol
        return v[:, keep] * np.sqrt(w[keep])

    def reorder(self) -> "DensityMatrix":
        """Same state with the two factors swapped (``B (x) A``)."""
        d_a, d_b = self.dims
        m = self.matrix.reshape(d_a, d_b, d_a, d_b).transpose(1, 0, 3, 2)
        ens = None
        if self.ensemble is not None:
            w, v = self.ensemble
            v = v.reshape(d_a, d_b, -1).transpose(1, 0, 2).reshape(d_a * d_b, -1)
            ens = (w, v)
        return DensityMatrix(m.reshape(d_a * d_b, d_a * d_b), (d_b, d_a), ens)


def product_state(rho_a: np.ndarray, rho_b: np.ndarray) -> DensityMatrix:
    rho_a, rho_b = np.asarray(rho_a), np.asarray(rho_b)
    return DensityMatrix(np.kron(rho_a, rho_b), (rho_a.shape[0], rho_b.shape[0]))


def partial_trace(rho: DensityMatrix, keep: str = "A") -> DensityMatrix:
    """Reduced state on the kept factor, returned with dims ``(d_kept, 1)``."""
    d_a, d_b = rho.dims
    if d_a * d_b != rho.dim:
        raise DimensionError("inconsistent bipartition")
    t = rho.matrix.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        red = np.einsum("ijkj->ik", t)
    elif keep == "B":
        red = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    return DensityMatrix(red, (red.shape[0], 1))
