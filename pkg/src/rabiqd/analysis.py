"""Coupling scans of thermal discord, extremum location and power-law fits."""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .discord import DiscordResult, quantum_discord
from .model import (
    ModelParams,
    ThermalConfig,
    build_hamiltonian,
    initial_cutoff,
    multiplet_blocks,
    solve,
    thermal_populations,
    thermal_state,
    NEGLIGIBLE_POPULATION,
)
from .optimizer import OptimizerConfig
from .statespace import Basis, DensityMatrix, multiplet_isometries, partial_trace

log = logging.getLogger(__name__)


class Partition(str, enum.Enum):
    FIELD_VS_QUBITS = "field"
    ONE_VS_REST = "one-vs-rest"


class FitError(ValueError):
    pass


def default_grid(n: int = 60, lo: float = 0.01, hi: float = 2.0) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def point_seed(master_seed: int, index: int) -> int:
    """Per-grid-point seed derived from ``(master_seed, index)``."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


# -- states -----------------------------------------------------------------

def model_at(template: ModelParams, g: float, cutoff: int | str = "auto") -> ModelParams:
    params = template.with_coupling(g)
    if cutoff == "auto":
        return params.with_cutoff(initial_cutoff(params.N, g, params.omega_r))
    return params.with_cutoff(int(cutoff))


def qubit_thermal_state(params: ModelParams, tau: float, multiplets: str = "all") -> np.ndarray:
    """``Tr_field`` of the Gibbs state, as a ``2**N`` qubit density matrix.

    ``multiplets="all"`` sums every total-spin block (the exact reduced state
    of the full tensor-product model); ``"symmetric"`` keeps only the maximal
    multiplet, i.e. the Dicke-basis model embedded in the qubit space.
    """
    N = params.N
    blocks = multiplet_blocks(params)
    if multiplets == "symmetric":
        blocks = blocks[:1]
    elif multiplets != "all":
        raise ValueError(f"multiplets must be 'all' or 'symmetric', got {multiplets!r}")
    spectra = [(j, mult, block, solve(block)) for j, mult, block in blocks]
    e0 = min(s.energies[0] for *_, s in spectra)
    isos = dict(multiplet_isometries(N))
    rho = np.zeros((2**N, 2**N), dtype=complex)
    Z = 0.0
    for j, mult, block, spec in spectra:
        e = spec.energies - e0
        w = np.exp(-e / tau) if tau > 0 else (e <= 1e-9).astype(float)
        keep = w > NEGLIGIBLE_POPULATION
        if not keep.any():
            continue
        vecs = spec.states[:, keep] * np.sqrt(w[keep])
        n_max, dj = block.space.dims
        T = vecs.T.reshape(-1, n_max, dj)
        sigma = np.einsum("kna,knb->ab", T, T.conj())
        Z += mult * w.sum()
        for W in isos[j]:
            rho += W @ sigma @ W.conj().T
    return rho / Z


def reduced_qubit_state(params: ModelParams, tau: float, multiplets: str = "all") -> DensityMatrix:
    """Two-party state ``(N-1 qubits) (x) (last qubit)`` of the field-traced Gibbs state."""
    if params.N < 2:
        raise ValueError("the one-vs-rest partition needs N >= 2")
    rho = qubit_thermal_state(params, tau, multiplets)
    return DensityMatrix(rho, (2 ** (params.N - 1), 2))


def partition_state(
    params: ModelParams, tau: float, partition: Partition | str, multiplets: str = "all"
) -> DensityMatrix:
    partition = Partition(partition)
    if partition is Partition.ONE_VS_REST:
        return reduced_qubit_state(params, tau, multiplets)
    return thermal_state(solve(params), ThermalConfig(tau))


# -- scans ------------------------------------------------------------------

@dataclass
class ScanRecord:
    N: int
    tau: float
    g_over_omega: np.ndarray
    discord: np.ndarray
    warnings: np.ndarray
    angles: list = field(default_factory=list, repr=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.g_over_omega = np.asarray(self.g_over_omega, dtype=float)
        self.discord = np.asarray(self.discord, dtype=float)
        if self.g_over_omega.shape != self.discord.shape:
            raise ValueError("grid and discord vectors differ in length")
        if np.any(np.diff(self.g_over_omega) <= 0):
            raise ValueError("g grid must be strictly increasing")


def _scan_point(args) -> tuple[float, bool, np.ndarray, int]:
    template, tau, g, partition, opt, cutoff, multiplets, x0 = args
    params = model_at(template, g, cutoff)
    rho = partition_state(params, tau, partition, multiplets)
    res: DiscordResult = quantum_discord(rho, opt, x0=x0)
    return res.value, res.warning, res.optimal_frame.angles, params.space.fock_cutoff


def discord_scan(
    template: ModelParams,
    tau: float,
    g_grid,
    partition: Partition | str = Partition.FIELD_VS_QUBITS,
    opt: OptimizerConfig | None = None,
    *,
    cutoff: int | str = "auto",
    multiplets: str = "all",
    workers: int = 1,
    warm_start: bool = False,
) -> ScanRecord:
    """Thermal-state discord along ``g_grid`` for one temperature.

    Grid points are independent tasks seeded by ``(opt.master_seed, index)``.
    ``warm_start`` seeds each point's first restart with the previous optimum,
    which forces a serial scan.
    """
    partition = Partition(partition)
    opt = opt or OptimizerConfig(local_method="auto")
    g_grid = np.asarray(g_grid, dtype=float)
    if g_grid.size == 0:
        raise ValueError("empty coupling grid")
    if np.any(np.diff(g_grid) <= 0):
        raise ValueError("g grid must be strictly increasing")
    if partition is Partition.ONE_VS_REST and template.N < 2:
        raise ValueError("the one-vs-rest partition needs N >= 2")
    tasks = [
        (template, tau, g, partition, replace(opt, master_seed=point_seed(opt.master_seed, i)), cutoff, multiplets, None)
        for i, g in enumerate(g_grid)
    ]
    if warm_start:
        results, x0 = [], None
        for t in tasks:
            out = _scan_point(t[:-1] + (x0,))
            results.append(out)
            x0 = out[2]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_point, tasks))
    else:
        results = [_scan_point(t) for t in tasks]
    values, warns, angles, cutoffs = zip(*results)
    if any(warns):
        log.warning("optimizer warnings at %d of %d grid points", sum(warns), len(warns))
    meta = {
        "basis": template.space.basis.value,
        "partition": partition.value,
        "multiplets": multiplets if partition is Partition.ONE_VS_REST else None,
        "cutoff": list(cutoffs),
        "master_seed": opt.master_seed,
        "warm_start": warm_start,
    }
    return ScanRecord(template.N, tau, g_grid, np.array(values), np.array(warns), list(angles), meta)


# -- extrema and fits -------------------------------------------------------

@dataclass(frozen=True)
class Extremum:
    g_star: float
    value: float
    index: int
    boundary: bool = False
    degenerate: bool = False


def locate_extremum(x, y, kind: str = "max") -> Extremum:
    """Grid extremum refined by the parabola through its two neighbours."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 3 or x.shape != y.shape:
        raise ValueError("need at least three points of matching length")
    if kind not in ("max", "min"):
        raise ValueError("kind must be 'max' or 'min'")
    if np.ptp(y) <= 1e-12:
        mid = x.size // 2
        return Extremum(float(x[mid]), float(y[mid]), mid, degenerate=True)
    s = 1.0 if kind == "max" else -1.0
    i = int(np.argmax(s * y))
    if i == 0 or i == x.size - 1:
        return Extremum(float(x[i]), float(y[i]), i, boundary=True)
    x0, x1, x2 = x[i - 1 : i + 2]
    y0, y1, y2 = y[i - 1 : i + 2]
    # vertex of the interpolating parabola (divided differences)
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    a = (d12 - d01) / (x2 - x0)
    if a == 0:
        return Extremum(float(x1), float(y1), i)
    b = d01 - a * (x0 + x1)
    xv = -b / (2 * a)
    yv = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1)
    return Extremum(float(xv), float(yv), i)


def record_extremum(record: ScanRecord, kind: str = "max") -> Extremum:
    return locate_extremum(record.g_over_omega, record.discord, kind)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    n_points: int

    def __call__(self, x):
        return self.prefactor * np.asarray(x, dtype=float) ** self.exponent


def power_law_fit(x, y) -> PowerLawFit:
    """Least-squares line through ``(log x, log y)``; ``R^2`` from the log residuals."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise FitError("x and y differ in length")
    if x.size < 2:
        raise FitError("need at least two points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fits need strictly positive data")
    lx, ly = np.log(x), np.log(y)
    mx, my = lx.mean(), ly.mean()
    sxx = np.sum((lx - mx) ** 2)
    if sxx == 0:
        raise FitError("all abscissae are equal")
    slope = np.sum((lx - mx) * (ly - my)) / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    ss_tot = np.sum((ly - my) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return PowerLawFit(float(slope), float(np.exp(intercept)), float(min(max(r2, 0.0), 1.0)), int(x.size))


# -- spectra ----------------------------------------------------------------

def spectrum_scan(template: ModelParams, g_grid, n_levels: int = 10, cutoff: int | str = "auto") -> np.ndarray:
    """Lowest ``n_levels`` energies above the ground state, one row per coupling."""
    rows = []
    for g in np.asarray(g_grid, dtype=float):
        e = np.linalg.eigvalsh(build_hamiltonian(model_at(template, g, cutoff)))
        rows.append(e[:n_levels] - e[0])
    return np.array(rows)


def eigenstate_discords(params: ModelParams, levels, opt: OptimizerConfig | None = None) -> list[float]:
    spec = solve(params)
    out = []
    for k in levels:
        rho = DensityMatrix.pure(spec.states[:, k], spec.dims)
        out.append(quantum_discord(rho, opt or OptimizerConfig(local_method="auto")).value)
    return out


def thermal_weights(params: ModelParams, tau: float, n_levels: int = 5) -> np.ndarray:
    spec = solve(params)
    return thermal_populations(spec.energies, tau)[:n_levels]
