"""Four-stroke quantum Otto cycle with the multiqubit Rabi working substance.

Strokes: thermalize ``H_h`` at ``tau_h``; adiabatic ``omega_h -> omega_c``
(populations carried onto the ``H_c`` eigenstates in energy order);
thermalize ``H_c`` at ``tau_c``; adiabatic return.  The coupling ``g`` is
fixed and qubits stay resonant with the field, so ``H_h`` and ``H_c`` differ
only through the common frequency.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import point_seed
from .discord import quantum_discord
from .model import (
    TAU_C,
    ModelParams,
    block_energies,
    build_hamiltonian,
    converge_cutoff,
    full_energies,
    initial_cutoff,
    solve,
    thermal_populations,
    NEGLIGIBLE_POPULATION,
)
from .optimizer import OptimizerConfig
from .statespace import Basis, DensityMatrix

log = logging.getLogger(__name__)

CROSSING_TOL = 1e-9


@dataclass(frozen=True)
class CycleSpec:
    """One cycle; ``base`` supplies ``N``, basis and convention at unit frequency.

    ``work_spectrum="all"`` evaluates heats and work on the complete
    ``2**N``-qubit spectrum (all total-spin blocks) even when the stage
    states live in the Dicke basis; ``"basis"`` uses the stage-state basis.
    """

    base: ModelParams
    g: float
    omega_h: float = 2.0
    omega_c: float = 1.0
    tau_h: float = 9 * TAU_C
    tau_c: float = TAU_C
    cutoff: int | str = "auto"
    work_spectrum: str = "all"

    def __post_init__(self):
        if not self.omega_h > self.omega_c > 0:
            raise ValueError("need omega_h > omega_c > 0")
        if not self.tau_h >= self.tau_c >= 0:
            raise ValueError("need tau_h >= tau_c >= 0")
        if self.g < 0:
            raise ValueError("coupling must be non-negative")
        if self.work_spectrum not in ("all", "basis"):
            raise ValueError("work_spectrum must be 'all' or 'basis'")

    def hamiltonians(self) -> tuple[ModelParams, ModelParams]:
        base = self.base.with_coupling(self.g)
        hot, cold = base.scaled(self.omega_h), base.scaled(self.omega_c)
        if self.cutoff == "auto":
            n = max(initial_cutoff(p.N, self.g, p.omega_r) for p in (hot, cold))
        elif self.cutoff == "converge":
            n = max(converge_cutoff(p) for p in (hot, cold))
        else:
            n = int(self.cutoff)
        return hot.with_cutoff(n), cold.with_cutoff(n)


@dataclass
class OttoRecord:
    N: int
    g: float
    q_hot: float
    q_cold: float
    work: float
    rho_stage: list[DensityMatrix] = field(default_factory=list, repr=False)
    discord_stage: list[float] = field(default_factory=list)
    level_crossing: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def delta_q_14(self) -> float:
        return self.discord_stage[0] - self.discord_stage[3] if self.discord_stage else float("nan")

    @property
    def delta_q_23(self) -> float:
        return self.discord_stage[1] - self.discord_stage[2] if self.discord_stage else float("nan")


def otto_heats(e_hot, e_cold, p_hot, p_cold) -> tuple[float, float, float]:
    """``(Q_h, Q_c, W)`` for energy-ordered level pairing."""
    dp = p_hot - p_cold
    q_h = float(np.sum(e_hot * dp))
    q_c = float(np.sum(e_cold * -dp))
    return q_h, q_c, q_h + q_c


def ordering_ambiguous(e_hot: np.ndarray, e_cold: np.ndarray, tol: float = CROSSING_TOL) -> bool:
    """True when a level pair is degenerate in one spectrum but not in the other."""
    dh, dc = np.diff(e_hot) < tol, np.diff(e_cold) < tol
    return bool(np.any(dh != dc))


def _stage_state(pops: np.ndarray, spec, dims) -> DensityMatrix:
    p = np.where(pops < NEGLIGIBLE_POPULATION, 0.0, pops)
    return DensityMatrix.from_ensemble(p, spec.states, dims)


def run_cycle(
    spec: CycleSpec,
    opt: OptimizerConfig | None = None,
    discord: bool = True,
    keep_states: bool = True,
) -> OttoRecord:
    """Heats, work and (optionally) stage states and discords of one cycle.

    With ``keep_states=False`` and ``discord=False`` only eigenvalues are
    computed and ``rho_stage`` stays empty.
    """
    hot, cold = spec.hamiltonians()
    need_states = keep_states or discord
    if need_states:
        s_h, s_c = solve(hot), solve(cold)
        e_hot, e_cold = s_h.energies, s_c.energies
    else:
        e_hot = np.linalg.eigvalsh(build_hamiltonian(hot))
        e_cold = np.linalg.eigvalsh(build_hamiltonian(cold))
    p1 = thermal_populations(e_hot, spec.tau_h)
    p3 = thermal_populations(e_cold, spec.tau_c)
    crossing = ordering_ambiguous(e_hot, e_cold)
    if spec.work_spectrum == "all" and hot.space.basis is Basis.DICKE:
        b_h, b_c = block_energies(hot), block_energies(cold)
        e_h, e_c = full_energies(hot, blocks=b_h), full_energies(cold, blocks=b_c)
        q_h, q_c, w = otto_heats(
            e_h, e_c, thermal_populations(e_h, spec.tau_h), thermal_populations(e_c, spec.tau_c)
        )
        # copies of one multiplet are degenerate in both spectra and pair trivially
        crossing = crossing or ordering_ambiguous(
            full_energies(hot, False, b_h), full_energies(cold, False, b_c)
        )
    else:
        q_h, q_c, w = otto_heats(e_hot, e_cold, p1, p3)
    if crossing:
        log.info("ambiguous level ordering at g=%g (N=%d)", spec.g, hot.N)
    rhos: list[DensityMatrix] = []
    if need_states:
        dims = hot.space.dims
        rhos = [
            _stage_state(p1, s_h, dims),
            _stage_state(p1, s_c, dims),
            _stage_state(p3, s_c, dims),
            _stage_state(p3, s_h, dims),
        ]
    discs: list[float] = []
    warn = False
    if discord:
        opt = opt or OptimizerConfig(local_method="auto")
        for k, rho in enumerate(rhos):
            res = quantum_discord(rho, replace(opt, master_seed=point_seed(opt.master_seed, k)))
            discs.append(res.value)
            warn = warn or res.warning
    meta = {
        "basis": hot.space.basis.value,
        "cutoff": hot.space.fock_cutoff,
        "work_spectrum": spec.work_spectrum if hot.space.basis is Basis.DICKE else "basis",
        "optimizer_warning": warn,
    }
    return OttoRecord(hot.N, spec.g, q_h, q_c, w, rhos if keep_states else [], discs, crossing, meta)


def _scan_task(args):
    spec, opt, discord = args
    return run_cycle(spec, opt, discord, keep_states=False)


def work_scan(
    template: CycleSpec,
    g_grid,
    N_list,
    opt: OptimizerConfig | None = None,
    *,
    discord: bool = True,
    basis: Basis | str | None = None,
    workers: int = 1,
) -> list[OttoRecord]:
    """Cycles over ``N_list x g_grid``; failed points are logged and skipped.

    Every point's optimizer seed is derived from ``(master_seed, flat index)``.
    """
    g_grid = np.asarray(g_grid, dtype=float)
    if np.any(np.diff(g_grid) <= 0):
        raise ValueError("g grid must be strictly increasing")
    opt = opt or OptimizerConfig(local_method="auto")
    tasks = []
    for N in N_list:
        b = Basis(basis) if basis is not None else (Basis.DICKE if N >= 2 else Basis.FULL_TENSOR)
        base = ModelParams.homogeneous(N, 0.0, n_max=2, basis=b, convention=template.base.convention)
        for g in g_grid:
            seed = point_seed(opt.master_seed, len(tasks))
            tasks.append((replace(template, base=base, g=float(g)), replace(opt, master_seed=seed), discord))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_scan_task, t) for t in tasks]
            outcomes = []
            for t, f in zip(tasks, futures):
                try:
                    outcomes.append(f.result())
                except Exception as err:  # per-point failures never abort the scan
                    log.error("cycle failed at N=%d g=%g: %s", t[0].base.N, t[0].g, err)
    else:
        outcomes = []
        for t in tasks:
            try:
                outcomes.append(_scan_task(t))
            except Exception as err:
                log.error("cycle failed at N=%d g=%g: %s", t[0].base.N, t[0].g, err)
    return outcomes


# -- decoupled closed forms --------------------------------------------------

def oscillator_work(omega_h, omega_c, tau_h, tau_c) -> float:
    """Otto work of a bare ``omega a^dag a`` mode (geometric-series populations)."""
    n = lambda w, t: 0.0 if t == 0 else 1.0 / np.expm1(w / t)  # noqa: E731
    return (omega_h - omega_c) * (n(omega_h, tau_h) - n(omega_c, tau_c))


def qubit_work(omega_h, omega_c, tau_h, tau_c, factor: float = 0.5) -> float:
    """Otto work of one qubit ``factor * omega * sigma_z`` (gap ``2 factor omega``)."""
    pe = lambda w, t: 0.0 if t == 0 else 1.0 / (1.0 + np.exp(2 * factor * w / t))  # noqa: E731
    return 2 * factor * (omega_h - omega_c) * (pe(omega_h, tau_h) - pe(omega_c, tau_c))


def decoupled_work(N, omega_h, omega_c, tau_h, tau_c, factor: float = 0.5) -> float:
    return oscillator_work(omega_h, omega_c, tau_h, tau_c) + N * qubit_work(
        omega_h, omega_c, tau_h, tau_c, factor
    )
