"""Basin-hopping global minimization with a nonlinear conjugate-gradient local step.

Restart ``r`` draws from ``numpy.random.default_rng([master_seed, r])``
(PCG64 seeded through ``SeedSequence``), so every restart is reproducible on
its own and serial and parallel runs agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

Objective = Callable[[np.ndarray], float]


class OptimizationError(RuntimeError):
    """Non-finite objective; carries the last valid iterate."""

    def __init__(self, msg: str, x: np.ndarray, value: float):
        super().__init__(msg)
        self.x = x
        self.value = value


@dataclass(frozen=True)
class OptimizerConfig:
    n_hops: int = 50
    hop_scale: float = 0.5
    metropolis_temperature: float = 1.0
    local_max_iters: int = 200
    local_tolerance: float = 1e-9
    n_restarts: int = 4
    master_seed: int = 0
    fd_step: float = 1e-6
    # extra knobs, off by default
    patience: int | None = None  # stop a chain after this many hops without improvement
    init_range: tuple[float, float] = (0.0, 2 * math.pi)
    local_method: str = "cg"  # "cg", "bfgs", or "auto" (resolved by the caller)

    def __post_init__(self):
        for name in ("n_hops", "local_max_iters", "n_restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("hop_scale", "metropolis_temperature", "local_tolerance", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.local_method not in (*LOCAL_METHODS, "auto"):
            raise ValueError(f"local_method must be one of {sorted(LOCAL_METHODS)} or 'auto'")


@dataclass
class LocalResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    grad_norm: float


@dataclass
class OptimizationOutcome:
    best_point: np.ndarray
    best_value: float
    hops_accepted: int
    converged: bool
    restart_values: list[float]
    best_curve: list[float] = field(default_factory=list)
    hops_taken: int = 0
    failures: int = 0


def central_difference(fun: Objective, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.empty_like(x, dtype=float)
    for i in range(len(x)):
        e = np.zeros_like(x, dtype=float)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def _checked(fun, x, last_x, last_f):
    f = float(fun(x))
    if not math.isfinite(f):
        raise OptimizationError(f"objective is not finite at {x!r}", last_x, last_f)
    return f


# a chain whose line search stalls with a gradient this small is at the
# finite-difference noise floor and is reported as converged
STALL_GRADIENT = 1e-6
MAX_STEP = 10.0


def _backtrack(fun, x, f, d, slope, alpha):
    """Armijo backtracking (c = 1e-4, halving); ``None`` if the step underflows."""
    dnorm = float(np.linalg.norm(d))
    floor = ARMIJO_MIN_STEP * (1 + float(np.linalg.norm(x)))
    while True:
        trial = x + alpha * d
        ft = _checked(fun, trial, x, f)
        if ft <= f + ARMIJO_C * alpha * slope:
            return trial, ft, alpha
        alpha *= 0.5
        if alpha * dnorm < floor:
            return None


ARMIJO_C = 1e-4
ARMIJO_MIN_STEP = 1e-16


def _start(fun, jac, x0, cfg):
    if jac is None:
        jac = lambda z: central_difference(fun, z, cfg.fd_step)  # noqa: E731
    x = np.array(x0, dtype=float)
    f = float(fun(x))
    if not math.isfinite(f):
        raise OptimizationError("objective is not finite at the starting point", x, f)
    return jac, x, f, np.asarray(jac(x), dtype=float)


def local_minimize(
    fun: Objective,
    x0,
    cfg: OptimizerConfig | None = None,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
) -> LocalResult:
    """Local descent with the method named by ``cfg.local_method``."""
    cfg = cfg or OptimizerConfig()
    method = "cg" if cfg.local_method == "auto" else cfg.local_method
    return LOCAL_METHODS[method](fun, x0, cfg, jac)


def conjugate_gradient(
    fun: Objective,
    x0,
    cfg: OptimizerConfig | None = None,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
) -> LocalResult:
    """Polak-Ribiere conjugate gradient with Armijo backtracking.

    Stops when the gradient norm drops below ``cfg.local_tolerance`` or
    after ``cfg.local_max_iters`` iterations.  The returned value never
    exceeds ``fun(x0)``.
    """
    cfg = cfg or OptimizerConfig()
    jac, x, f, g = _start(fun, jac, x0, cfg)
    d = -g
    f_prev = None
    gnorm = float(np.linalg.norm(g))
    it = 0
    converged = gnorm < cfg.local_tolerance
    while not converged and it < cfg.local_max_iters:
        slope = float(g @ d)
        if slope >= 0:
            d, slope = -g, -float(g @ g)
        dnorm = float(np.linalg.norm(d))
        if f_prev is None:
            alpha = min(1.0, 1.0 / dnorm)
        else:
            # quadratic-interpolation guess from the previous decrease
            alpha = -1.01 * 2 * (f_prev - f) / slope if f_prev > f else 1.0
            alpha = min(max(alpha, 1e-10 / dnorm), MAX_STEP / dnorm)
        step = _backtrack(fun, x, f, d, slope, alpha)
        if step is None:
            if np.array_equal(d, -g):
                converged = gnorm < STALL_GRADIENT
                break
            d = -g  # retry along steepest descent
            continue
        trial, ft, _ = step
        it += 1
        g_new = np.asarray(jac(trial), dtype=float)
        beta = float(g_new @ (g_new - g)) / float(g @ g)
        d = -g_new + beta * d
        if float(g_new @ d) >= 0:
            d = -g_new
        x, f_prev, f, g = trial, f, ft, g_new
        gnorm = float(np.linalg.norm(g))
        converged = gnorm < cfg.local_tolerance
    return LocalResult(x, f, it, converged, gnorm)


def bfgs(
    fun: Objective,
    x0,
    cfg: OptimizerConfig | None = None,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
) -> LocalResult:
    """Quasi-Newton descent (inverse BFGS update) with the same line search.

    Updates with non-positive curvature are skipped so the inverse Hessian
    stays positive definite.
    """
    cfg = cfg or OptimizerConfig()
    jac, x, f, g = _start(fun, jac, x0, cfg)
    n = x.size
    Hinv = np.eye(n)
    gnorm = float(np.linalg.norm(g))
    it = 0
    converged = gnorm < cfg.local_tolerance
    while not converged and it < cfg.local_max_iters:
        d = -Hinv @ g
        slope = float(g @ d)
        if slope >= 0:
            Hinv = np.eye(n)
            d, slope = -g, -float(g @ g)
        alpha = 1.0 if it else min(1.0, 1.0 / float(np.linalg.norm(d)))
        step = _backtrack(fun, x, f, d, slope, alpha)
        if step is None:
            if np.array_equal(d, -g):
                converged = gnorm < STALL_GRADIENT
                break
            Hinv = np.eye(n)
            continue
        trial, ft, alpha = step
        it += 1
        g_new = np.asarray(jac(trial), dtype=float)
        s_k, y_k = trial - x, g_new - g
        sy = float(s_k @ y_k)
        if sy > 1e-12 * float(np.linalg.norm(s_k) * np.linalg.norm(y_k)):
            if it == 1:
                Hinv = np.eye(n) * sy / float(y_k @ y_k)
            rho = 1.0 / sy
            Hy = Hinv @ y_k
            Hinv = Hinv - rho * (np.outer(s_k, Hy) + np.outer(Hy, s_k)) + (rho * rho * float(y_k @ Hy) + rho) * np.outer(s_k, s_k)
        x, f, g = trial, ft, g_new
        gnorm = float(np.linalg.norm(g))
        converged = gnorm < cfg.local_tolerance
    return LocalResult(x, f, it, converged, gnorm)


LOCAL_METHODS = {"cg": conjugate_gradient, "bfgs": bfgs}


@dataclass
class _Chain:
    index: int
    best_x: np.ndarray | None
    best_f: float
    accepted: int
    converged: bool
    curve: list[float]
    hops: int
    failures: int


def _run_chain(fun, jac, x0, cfg: OptimizerConfig, r: int) -> _Chain:
    rng = np.random.default_rng([cfg.master_seed, r])
    x0 = np.asarray(x0, dtype=float)
    start = x0.copy() if r == 0 else rng.uniform(*cfg.init_range, size=x0.shape)
    failures = 0
    try:
        loc = local_minimize(fun, start, cfg, jac)
    except OptimizationError:
        return _Chain(r, None, math.inf, 0, False, [], 0, 1)
    x, f = loc.x, loc.value
    best_x, best_f, best_conv = x, f, loc.converged
    curve = [best_f]
    accepted = since_best = hops = 0
    for _ in range(cfg.n_hops):
        step = rng.uniform(-cfg.hop_scale, cfg.hop_scale, size=x.shape)
        u = rng.random()
        hops += 1
        try:
            loc = local_minimize(fun, x + step, cfg, jac)
        except OptimizationError:
            failures += 1
            curve.append(best_f)
            continue
        if loc.value <= f or u < math.exp(-(loc.value - f) / cfg.metropolis_temperature):
            x, f = loc.x, loc.value
            accepted += 1
        if loc.value < best_f:
            best_x, best_f, best_conv = loc.x, loc.value, loc.converged
            since_best = 0
        else:
            since_best += 1
        curve.append(best_f)
        if cfg.patience is not None and since_best >= cfg.patience:
            break
    return _Chain(r, best_x, best_f, accepted, best_conv, curve, hops, failures)


def basin_hop(
    fun: Objective,
    x0,
    cfg: OptimizerConfig | None = None,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    mapper: Callable[..., Iterable] = map,
) -> OptimizationOutcome:
    """Global minimum over ``cfg.n_restarts`` independent basin-hopping chains.

    Restart 0 starts at ``x0``; the others at points drawn uniformly from
    ``cfg.init_range``.  ``mapper`` may be an executor's ``map`` to run the
    chains concurrently; the merge (lowest value, lowest restart index on
    ties) does not depend on completion order.
    """
    cfg = cfg or OptimizerConfig()
    chains = list(mapper(lambda r: _run_chain(fun, jac, x0, cfg, r), range(cfg.n_restarts)))
    chains.sort(key=lambda c: c.index)
    ok = [c for c in chains if c.best_x is not None]
    if not ok:
        raise OptimizationError("every restart failed", np.asarray(x0, dtype=float), math.nan)
    best = min(ok, key=lambda c: (c.best_f, c.index))
    # combined best-so-far curve: chains are visited in index order
    curve, running = [], math.inf
    for c in ok:
        for v in c.curve:
            running = min(running, v)
            curve.append(running)
    return OptimizationOutcome(
        best_point=best.best_x,
        best_value=best.best_f,
        hops_accepted=sum(c.accepted for c in chains),
        converged=best.converged,
        restart_values=[c.best_f for c in chains],
        best_curve=curve,
        hops_taken=sum(c.hops for c in chains),
        failures=sum(c.failures for c in chains),
    )
