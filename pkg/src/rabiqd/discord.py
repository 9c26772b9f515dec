"""Entropies, measured conditional entropy and quantum discord (in bits).

The measured party is always the right factor ``B`` of a
:class:`~rabiqd.statespace.DensityMatrix`.  Projective measurements on ``B``
are rank-one projectors onto the columns of a unitary built from two-level
blocks, three angles per block.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .optimizer import OptimizationError, OptimizationOutcome, OptimizerConfig, basin_hop
from .statespace import DensityMatrix, DimensionError, partial_trace

log = logging.getLogger(__name__)

ZERO_EIGENVALUE = 1e-14
ZERO_PROBABILITY = 1e-14
PSD_TOLERANCE = 1e-10
CLAMP_TOLERANCE = 1e-9


class StateError(ValueError):
    pass


def frame_size(d: int) -> int:
    """Number of angles parameterizing a measurement on a ``d``-level system."""
    return 3 * d * (d - 1) // 2


@dataclass(frozen=True, eq=False)
class MeasurementFrame:
    dim_b: int
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float).reshape(-1)
        if self.dim_b < 2:
            raise DimensionError("measured subsystem needs dimension >= 2")
        if a.size != frame_size(self.dim_b):
            raise DimensionError(f"expected {frame_size(self.dim_b)} angles for d={self.dim_b}, got {a.size}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @classmethod
    def computational(cls, d: int) -> "MeasurementFrame":
        """Frame whose projectors are the computational basis (all blocks diag(1, -1))."""
        a = np.zeros((frame_size(d) // 3, 3))
        a[:, 0] = np.pi / 2
        return cls(d, a.reshape(-1))

    def wrapped(self) -> "MeasurementFrame":
        return MeasurementFrame(self.dim_b, np.mod(self.angles, 2 * np.pi))


def block_pairs(d: int) -> list[tuple[int, int]]:
    """Zero-based ``(k, k + n)`` index pairs in product order."""
    return [(k, k + n) for k in range(d - 1) for n in range(1, d - k)]


def measurement_unitaries(angles: np.ndarray, d: int) -> np.ndarray:
    """Batched version of :func:`measurement_unitary`; ``angles`` has shape ``(..., P)``."""
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-1] != frame_size(d):
        raise DimensionError(f"expected {frame_size(d)} angles for d={d}, got {angles.shape[-1]}")
    lead = angles.shape[:-1]
    phi = angles.reshape(lead + (-1, 3))
    V = np.broadcast_to(np.eye(d, dtype=complex), lead + (d, d)).copy()
    for b, (i, l) in enumerate(block_pairs(d)):
        p1, p2, p3 = phi[..., b, 0], phi[..., b, 1], phi[..., b, 2]
        s, c = np.sin(p1), np.cos(p1)
        vii = s * np.exp(1j * p2)
        vil = c * np.exp(-1j * p3)
        vli = c * np.exp(1j * p3)
        vll = -s * np.exp(-1j * p2)
        # right-multiplication by the block only mixes columns i and l
        ci, cl = V[..., :, i].copy(), V[..., :, l].copy()
        V[..., :, i] = ci * vii[..., None] + cl * vli[..., None]
        V[..., :, l] = ci * vil[..., None] + cl * vll[..., None]
    return V


def _blocks(angles: np.ndarray, d: int) -> tuple[list[np.ndarray], list[list[np.ndarray]]]:
    """Full ``d x d`` two-level blocks and their derivatives w.r.t. the three angles."""
    blocks, derivs = [], []
    for b, (i, l) in enumerate(block_pairs(d)):
        p1, p2, p3 = angles[3 * b : 3 * b + 3]
        s, c = np.sin(p1), np.cos(p1)
        e2, e3 = np.exp(1j * p2), np.exp(1j * p3)
        vals = np.array([s * e2, c / e3, c * e3, -s / e2])
        dvals = [
            np.array([c * e2, -s / e3, -s * e3, -c / e2]),
            np.array([1j * s * e2, 0, 0, 1j * s / e2]),
            np.array([0, -1j * c / e3, 1j * c * e3, 0]),
        ]
        B = np.eye(d, dtype=complex)
        B[[i, i, l, l], [i, l, i, l]] = vals
        blocks.append(B)
        ds = []
        for dv in dvals:
            D = np.zeros((d, d), dtype=complex)
            D[[i, i, l, l], [i, l, i, l]] = dv
            ds.append(D)
        derivs.append(ds)
    return blocks, derivs


def unitary_jacobian(angles: np.ndarray, d: int) -> np.ndarray:
    """``dV/dtheta_p`` stacked along the first axis, shape ``(P, d, d)``."""
    angles = np.asarray(angles, dtype=float)
    blocks, derivs = _blocks(angles, d)
    n = len(blocks)
    prefix = [np.eye(d, dtype=complex)]
    for B in blocks:
        prefix.append(prefix[-1] @ B)
    suffix = [np.eye(d, dtype=complex)]
    for B in reversed(blocks):
        suffix.append(B @ suffix[-1])
    suffix = suffix[::-1]
    out = np.empty((3 * n, d, d), dtype=complex)
    for m in range(n):
        for q in range(3):
            out[3 * m + q] = prefix[m] @ derivs[m][q] @ suffix[m + 1]
    return out


def measurement_unitary(frame: MeasurementFrame) -> np.ndarray:
    """Ordered product of the two-level blocks of ``frame``."""
    return measurement_unitaries(frame.angles, frame.dim_b)


def projectors(frame: MeasurementFrame) -> np.ndarray:
    V = measurement_unitary(frame)
    return np.einsum("aj,bj->jab", V, V.conj())


def _entropy_from_eigs(w: np.ndarray) -> float:
    w = w[w > ZERO_EIGENVALUE]
    return max(0.0, float(-np.sum(w * np.log2(w))))


def eigenvalues(rho: DensityMatrix | np.ndarray) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        if rho.ensemble is not None:
            w, v = rho.ensemble
            # nonzero spectrum of V diag(w) V^H equals that of sqrt(w) V^H V sqrt(w)
            f = v * np.sqrt(w)
            w = np.linalg.eigvalsh(f.conj().T @ f)
        else:
            w = np.linalg.eigvalsh(rho.matrix)
    else:
        w = np.linalg.eigvalsh(np.asarray(rho))
    if w.size and w.min() < -PSD_TOLERANCE:
        raise StateError(f"state is not positive semidefinite (eigenvalue {w.min():.3e})")
    return w


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    return _entropy_from_eigs(eigenvalues(rho))


def reduced_entropies(rho: DensityMatrix) -> tuple[float, float, float]:
    """``(S(rho_A), S(rho_B), S(rho_AB))``."""
    return (
        von_neumann_entropy(partial_trace(rho, "A")),
        von_neumann_entropy(partial_trace(rho, "B")),
        von_neumann_entropy(rho),
    )


def mutual_information(rho_ab: DensityMatrix) -> float:
    s_a, s_b, s_ab = reduced_entropies(rho_ab)
    return s_a + s_b - s_ab


class ConditionalEntropy:
    """Measured conditional entropy ``S(A | Pi^B(theta))`` as a function of the angles.

    Stores a factor ``F`` with ``rho = F F^H`` reshaped to ``(r, d_A, d_B)``.
    For outcome ``j`` with measurement vector ``u_j`` the unnormalized
    conditional state is ``M_j^H M_j`` with ``M_j = F_j conj(u_j)``, and its
    spectrum is taken from the smaller of the two Gram matrices.
    """

    def __init__(self, rho_ab: DensityMatrix, rank_tol: float = ZERO_EIGENVALUE):
        d_a, d_b = rho_ab.dims
        if d_b < 2:
            raise DimensionError("measured subsystem needs dimension >= 2")
        F = rho_ab.factor(rank_tol)
        self.d_a, self.d_b, self.rank = d_a, d_b, F.shape[1]
        self.tensor = np.ascontiguousarray(F.T.reshape(self.rank, d_a, d_b))
        self.n_angles = frame_size(d_b)

    def batch(self, angles: np.ndarray) -> np.ndarray:
        angles = np.atleast_2d(angles)
        U = measurement_unitaries(angles, self.d_b).conj()
        # M[s, j, k, a] = sum_b F[k, a, b] conj(V[s, b, j])
        M = np.einsum("kab,sbj->sjka", self.tensor, U, optimize=True)
        if self.rank <= self.d_a:
            G = M @ M.conj().swapaxes(-1, -2)
        else:
            G = M.swapaxes(-1, -2) @ M.conj()
        lam = np.linalg.eigvalsh(G)
        p = lam.sum(axis=-1)
        safe = np.where(lam > ZERO_EIGENVALUE, lam, 1.0)
        ent = -np.sum(np.where(lam > ZERO_EIGENVALUE, lam * np.log2(safe), 0.0), axis=-1)
        psafe = np.where(p > ZERO_PROBABILITY, p, 1.0)
        ent = np.where(p > ZERO_PROBABILITY, ent + p * np.log2(psafe), 0.0)
        return ent.sum(axis=-1)

    def __call__(self, angles) -> float:
        return float(self.batch(np.asarray(angles, dtype=float))[0])

    def gradient(self, angles) -> np.ndarray:
        """Analytic gradient.

        For outcome ``j`` write the conditional state as ``A A^H`` with
        ``A[a, k] = sum_b F[k, a, b] conj(V[b, j])``.  Then
        ``dS_j = -2 Re Tr(A^H L dA)`` where ``L = log2(sigma_j) - log2(p_j)`` on
        the support, and ``A^H L = K A^H`` with ``K`` built from the Gram
        eigenvectors whenever the rank is the smaller side.
        """
        x = np.asarray(angles, dtype=float)
        V = measurement_unitaries(x, self.d_b)
        A = np.einsum("kab,bj->jak", self.tensor, V.conj(), optimize=True)  # (j, a, r)
        if self.rank <= self.d_a:
            lam, W = np.linalg.eigh(A.conj().swapaxes(-1, -2) @ A)  # r x r
        else:
            lam, W = np.linalg.eigh(A @ A.conj().swapaxes(-1, -2))  # d_a x d_a
        p = lam.sum(axis=-1, keepdims=True)
        ok = (lam > ZERO_EIGENVALUE) & (p > ZERO_PROBABILITY)
        ell = np.where(ok, np.log2(np.where(ok, lam, 1.0)) - np.log2(np.where(p > 0, p, 1.0)), 0.0)
        Kmat = (W * ell[:, None, :]) @ W.conj().swapaxes(-1, -2)
        if self.rank <= self.d_a:
            X = Kmat @ A.conj().swapaxes(-1, -2)  # (j, r, a) = K A^H
        else:
            X = (Kmat @ A).conj().swapaxes(-1, -2)  # (L A)^H
        Y = np.einsum("jka,kab->bj", X, self.tensor, optimize=True)
        dV = unitary_jacobian(x, self.d_b)
        return -2 * np.real(np.einsum("bj,pbj->p", Y, dV.conj()))

    def fd_gradient(self, angles, h: float = 1e-6) -> np.ndarray:
        """Central finite differences, all displaced points in one batch."""
        x = np.asarray(angles, dtype=float)
        steps = h * np.eye(x.size)
        vals = self.batch(np.concatenate([x + steps, x - steps]))
        return (vals[: x.size] - vals[x.size :]) / (2 * h)


def conditional_entropy(rho_ab: DensityMatrix, frame: MeasurementFrame) -> float:
    if frame.dim_b != rho_ab.dims[1]:
        raise DimensionError(f"frame acts on d={frame.dim_b}, state has d_B={rho_ab.dims[1]}")
    return ConditionalEntropy(rho_ab)(frame.angles)


@dataclass
class DiscordResult:
    value: float
    optimal_frame: MeasurementFrame
    conditional_entropy: float
    mutual_information: float
    entropy_a: float
    entropy_b: float
    entropy_ab: float
    warning: bool = False
    trace: dict = field(default_factory=dict)


def quantum_discord(
    rho_ab: DensityMatrix,
    opt: OptimizerConfig | None = None,
    x0: np.ndarray | None = None,
    mapper: Callable[..., Iterable] = map,
    gradient: str = "analytic",
) -> DiscordResult:
    """Discord of ``rho_ab`` with the measurement on ``B``.

    ``x0`` seeds restart 0 (default: all angles zero).  ``gradient`` selects
    the exact gradient (``"analytic"``) or central differences with step
    ``opt.fd_step`` (``"fd"``).  A result is flagged
    with ``warning=True`` when the best local search did not converge or the
    optimum falls noticeably below the non-negativity bound.
    """
    opt = opt or OptimizerConfig()
    s_a, s_b, s_ab = reduced_entropies(rho_ab)
    cond = ConditionalEntropy(rho_ab)
    if opt.local_method == "auto":
        # CG is reliable for qubit measurements; larger frames are badly
        # conditioned and converge far faster with quasi-Newton steps
        opt = replace(opt, local_method="cg" if cond.d_b == 2 else "bfgs")
    start = np.zeros(cond.n_angles) if x0 is None else np.asarray(x0, dtype=float)
    if gradient == "analytic":
        jac = cond.gradient
    elif gradient == "fd":
        jac = lambda z: cond.fd_gradient(z, opt.fd_step)  # noqa: E731
    else:
        raise ValueError(f"unknown gradient mode {gradient!r}")
    try:
        out: OptimizationOutcome = basin_hop(cond, start, opt, jac=jac, mapper=mapper)
        best_x, best_f, warn = out.best_point, out.best_value, not out.converged
        trace = {
            "hops_taken": out.hops_taken,
            "hops_accepted": out.hops_accepted,
            "restart_values": out.restart_values,
            "best_curve": out.best_curve,
            "failures": out.failures,
        }
    except OptimizationError as err:
        log.warning("discord optimization failed: %s", err)
        best_x, best_f, warn = err.x, float(cond(err.x)), True
        trace = {"error": str(err)}
    q = s_b - s_ab + best_f
    if q < 0:
        if q < -CLAMP_TOLERANCE:
            warn = True
            log.warning("discord optimum %.3e below zero", q)
        q = 0.0
    return DiscordResult(
        value=q,
        optimal_frame=MeasurementFrame(cond.d_b, best_x).wrapped(),
        conditional_entropy=best_f,
        mutual_information=s_a + s_b - s_ab,
        entropy_a=s_a,
        entropy_b=s_b,
        entropy_ab=s_ab,
        warning=warn,
        trace=trace,
    )
