"""``rabiqd`` command line: spectrum, discord-scan, otto and fit jobs.

Each command reads an optional flat YAML config (``--config``), lets
``--set key=value`` flags override its keys, and writes a CSV plus a JSON
provenance sidecar (``<csv>.json``).  Exit codes: 0 ok, 2 config error,
3 numerical failure; partial outputs are removed on failure.

Config keys (all optional unless noted):

common
    ``output`` (required), ``N``, ``omega_q`` (units of omega_r), ``convention``
    (half|full), ``basis`` (full|dicke), ``cutoff`` (auto|converge|int),
    ``g_min``, ``g_max``, ``g_points``, ``g_spacing`` (log|linear), ``g_values``
    (explicit list, overrides the range keys), ``master_seed``, ``threads``
spectrum
    ``n_levels``
discord-scan
    ``temperatures_mK`` or ``taus`` (exactly one), ``frequency_GHz``,
    ``partition`` (field|one-vs-rest), ``multiplets`` (all|symmetric),
    ``n_hops``, ``n_restarts``, ``hop_scale``, ``metropolis_temperature``,
    ``local_max_iters``, ``local_tolerance``, ``local_method``, ``save_angles``
otto
    ``N_list``, ``omega_h``, ``omega_c``, ``T_h_mK``/``T_c_mK`` or
    ``tau_h``/``tau_c``, ``frequency_GHz``, ``discord`` (bool),
    ``work_spectrum`` (all|basis) and the optimizer keys above
fit
    ``input`` (required), ``x``, ``y`` (column names; ``y`` may be a list),
    ``group_by`` (optional column; one fit per distinct value)
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import (
    FitError,
    Partition,
    discord_scan,
    locate_extremum,
    model_at,
    power_law_fit,
)
from .model import TAU_C, ModelParams, build_hamiltonian, converge_cutoff, reduced_temperature
from .optimizer import OptimizerConfig
from .otto import CycleSpec, work_scan
from .statespace import Basis

log = logging.getLogger("rabiqd")

THREADS_ENV = "RABIQD_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


# -- config -----------------------------------------------------------------

def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg: dict = {}
    if path:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        if not isinstance(loaded, dict) or any(isinstance(v, dict) for v in loaded.values()):
            raise ConfigError("config must be a flat key-value mapping")
        cfg.update(loaded)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        cfg[key.strip()] = yaml.safe_load(raw)
    return cfg


def _get(cfg, key, default=None, kind=None):
    val = cfg.get(key, default)
    if val is None or kind is None:
        return val
    try:
        return kind(val)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad value for {key}: {val!r}") from err


def _list(cfg, key, kind=float):
    val = cfg.get(key)
    if val is None:
        return None
    if not isinstance(val, (list, tuple)):
        val = [val]
    try:
        return [kind(v) for v in val]
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad list for {key}: {val!r}") from err


def g_grid(cfg) -> np.ndarray:
    vals = _list(cfg, "g_values")
    if vals is None:
        lo, hi = _get(cfg, "g_min", 0.01, float), _get(cfg, "g_max", 2.0, float)
        n = _get(cfg, "g_points", 60, int)
        spacing = _get(cfg, "g_spacing", "log", str)
        if n < 1:
            raise ConfigError("g_points must be >= 1")
        if spacing == "log":
            if lo <= 0:
                raise ConfigError("log spacing needs g_min > 0")
            vals = np.geomspace(lo, hi, n)
        elif spacing == "linear":
            vals = np.linspace(lo, hi, n)
        else:
            raise ConfigError("g_spacing must be log or linear")
    grid = np.asarray(vals, dtype=float)
    if grid.size == 0:
        raise ConfigError("empty coupling grid")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ConfigError("g grid must be non-negative and strictly increasing")
    return grid


def _basis(cfg, N) -> Basis:
    default = "dicke" if N >= 2 else "full"
    try:
        return Basis(_get(cfg, "basis", default, str))
    except ValueError as err:
        raise ConfigError(str(err)) from err


def template(cfg, N=None) -> ModelParams:
    N = _get(cfg, "N", 1, int) if N is None else N
    if N < 1:
        raise ConfigError("N must be >= 1")
    try:
        return ModelParams.homogeneous(
            N, 0.0, n_max=2, omega_q=_get(cfg, "omega_q", 1.0, float),
            basis=_basis(cfg, N), convention=_get(cfg, "convention", "half", str),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _cutoff(cfg):
    c = cfg.get("cutoff", "auto")
    if c in ("auto", "converge"):
        return c
    try:
        c = int(c)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad cutoff {c!r}") from err
    if c < 1:
        raise ConfigError("cutoff must be positive")
    return c


def optimizer_config(cfg) -> OptimizerConfig:
    try:
        return OptimizerConfig(
            n_hops=_get(cfg, "n_hops", 50, int),
            hop_scale=_get(cfg, "hop_scale", 0.5, float),
            metropolis_temperature=_get(cfg, "metropolis_temperature", 1.0, float),
            local_max_iters=_get(cfg, "local_max_iters", 200, int),
            local_tolerance=_get(cfg, "local_tolerance", 1e-9, float),
            n_restarts=_get(cfg, "n_restarts", 4, int),
            master_seed=_get(cfg, "master_seed", 0, int),
            local_method=_get(cfg, "local_method", "auto", str),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def temperatures(cfg, mk_key="temperatures_mK", tau_key="taus") -> list[float]:
    mk, taus = _list(cfg, mk_key), _list(cfg, tau_key)
    if (mk is None) == (taus is None):
        raise ConfigError(f"give exactly one of {mk_key} or {tau_key}")
    if mk is not None:
        f = _get(cfg, "frequency_GHz", 8.0, float)
        taus = [reduced_temperature(t, f) for t in mk]
    if any(t < 0 for t in taus):
        raise ConfigError("temperatures must be non-negative")
    return taus


def _single_temperature(cfg, which: str):
    mk, tau = cfg.get(f"T_{which}_mK"), cfg.get(f"tau_{which}")
    if mk is not None and tau is not None:
        raise ConfigError(f"give only one of T_{which}_mK or tau_{which}")
    try:
        if mk is not None:
            tau = reduced_temperature(float(mk), _get(cfg, "frequency_GHz", 8.0, float))
        return None if tau is None else float(tau)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad temperature for stage {which}") from err


def threads(cfg) -> int:
    n = cfg.get("threads") or os.environ.get(THREADS_ENV) or 1
    try:
        n = int(n)
    except ValueError as err:
        raise ConfigError(f"bad thread count {n!r}") from err
    return max(1, n)


# -- outputs ----------------------------------------------------------------

def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


class Outputs:
    """Tracks written files so a failed run leaves nothing behind."""

    def __init__(self):
        self.paths: list[Path] = []

    def csv(self, path, header, rows):
        path = Path(path)
        self.paths.append(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])

    def json(self, path, payload):
        path = Path(path)
        self.paths.append(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def discard(self):
        for p in self.paths:
            p.unlink(missing_ok=True)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if hasattr(x, "value"):
        return x.value
    return str(x)


def provenance(command, cfg, **extra) -> dict:
    return {
        "command": command,
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "master_seed": cfg.get("master_seed", 0),
        "version": __version__,
        **extra,
    }


def _output(cfg) -> str:
    out = cfg.get("output")
    if not out:
        raise ConfigError("missing required key: output")
    return str(out)


# -- commands ---------------------------------------------------------------

def cmd_spectrum(cfg, out: Outputs):
    tpl, grid = template(cfg), g_grid(cfg)
    n_levels = _get(cfg, "n_levels", 10, int)
    if n_levels < 1:
        raise ConfigError("n_levels must be >= 1")
    cutoff = _cutoff(cfg)
    rows, cutoffs = [], []
    for g in grid:
        if cutoff == "converge":
            params = tpl.with_coupling(g)
            params = params.with_cutoff(converge_cutoff(params))
        else:
            params = model_at(tpl, g, cutoff)
        e = np.linalg.eigvalsh(build_hamiltonian(params))
        if not np.all(np.isfinite(e)):
            raise FloatingPointError("non-finite eigenvalues")
        cutoffs.append(params.space.fock_cutoff)
        for k in range(min(n_levels, e.size)):
            rows.append((g, k, e[k] - e[0]))
    path = _output(cfg)
    out.csv(path, ["g_over_omega", "level_index", "energy_minus_ground"], rows)
    out.json(path + ".json", provenance("spectrum", cfg, params=_describe(tpl), cutoff=cutoffs))


def _describe(p: ModelParams) -> dict:
    return {
        "N": p.N, "omega_r": p.omega_r, "omega_q": list(p.omega_q),
        "basis": p.space.basis.value, "convention": p.convention.value,
    }


def cmd_discord_scan(cfg, out: Outputs):
    tpl, grid, taus = template(cfg), g_grid(cfg), temperatures(cfg)
    opt = optimizer_config(cfg)
    try:
        partition = Partition(_get(cfg, "partition", "field", str))
    except ValueError as err:
        raise ConfigError(str(err)) from err
    if partition is Partition.ONE_VS_REST and tpl.N < 2:
        raise ConfigError("one-vs-rest needs N >= 2")
    multiplets = _get(cfg, "multiplets", "all", str)
    if multiplets not in ("all", "symmetric"):
        raise ConfigError("multiplets must be all or symmetric")
    cutoff = _cutoff(cfg)
    if cutoff == "converge":
        raise ConfigError("discord-scan supports cutoff auto or an integer")
    rows, records = [], []
    for tau in taus:
        rec = discord_scan(
            tpl, tau, grid, partition, opt, cutoff=cutoff, multiplets=multiplets, workers=threads(cfg)
        )
        records.append(rec)
        rows += [(rec.N, tau, g, q, w) for g, q, w in zip(rec.g_over_omega, rec.discord, rec.warnings)]
    path = _output(cfg)
    out.csv(path, ["N", "tau", "g_over_omega", "discord", "optimizer_warning"], rows)
    extra = {
        "params": _describe(tpl),
        "optimizer": asdict(opt),
        "scans": [{"tau": r.tau, **r.metadata} for r in records],
    }
    if cfg.get("save_angles"):
        extra["angles"] = [[a.tolist() for a in r.angles] for r in records]
    out.json(path + ".json", extra | provenance("discord-scan", cfg))


def _extrema(x, y):
    try:
        a, b = locate_extremum(x, y, "max"), locate_extremum(x, y, "min")
    except ValueError:
        return None
    return {"g_max": a.g_star, "value_max": a.value, "boundary_max": a.boundary,
            "g_min": b.g_star, "value_min": b.value, "boundary_min": b.boundary}


def _fit_or_none(x, y):
    try:
        return asdict(power_law_fit(x, y))
    except FitError:
        return None


def cmd_otto(cfg, out: Outputs):
    grid = g_grid(cfg)
    N_list = _list(cfg, "N_list", int) or [_get(cfg, "N", 1, int)]
    if any(n < 1 for n in N_list):
        raise ConfigError("N_list entries must be >= 1")
    if any(k in cfg for k in ("T_h_mK", "T_c_mK")) and any(k in cfg for k in ("tau_h", "tau_c")):
        raise ConfigError("mix of mK and dimensionless temperatures")
    tau_c = _single_temperature(cfg, "c")
    tau_h = _single_temperature(cfg, "h")
    tau_c = TAU_C if tau_c is None else tau_c
    tau_h = 9 * tau_c if tau_h is None else tau_h
    do_discord = bool(cfg.get("discord", True))
    try:
        spec = CycleSpec(
            template(cfg, N_list[0]), 0.0,
            omega_h=_get(cfg, "omega_h", 2.0, float), omega_c=_get(cfg, "omega_c", 1.0, float),
            tau_h=tau_h, tau_c=tau_c, cutoff=_cutoff(cfg),
            work_spectrum=_get(cfg, "work_spectrum", "all", str),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err
    basis = cfg.get("basis")
    recs = work_scan(
        spec, grid, N_list, optimizer_config(cfg), discord=do_discord, basis=basis, workers=threads(cfg)
    )
    if len(recs) != len(grid) * len(N_list):
        raise FloatingPointError(f"{len(grid) * len(N_list) - len(recs)} cycles failed")
    nan4 = [float("nan")] * 4
    rows = [
        (r.N, r.g, r.work, r.q_hot, r.q_cold, *(r.discord_stage or nan4), r.delta_q_14, r.delta_q_23)
        for r in recs
    ]
    path = _output(cfg)
    header = ["N", "g_over_omega", "work", "q_hot", "q_cold",
              "discord_s1", "discord_s2", "discord_s3", "discord_s4", "delta_q14", "delta_q23"]
    out.csv(path, header, rows)
    per_n, crossings = {}, {}
    for n in N_list:
        sub = [r for r in recs if r.N == n]
        x = np.array([r.g for r in sub])
        per_n[n] = {"work": _extrema(x, [r.work for r in sub])}
        if do_discord:
            per_n[n]["delta_q23"] = _extrema(x, [r.delta_q_23 for r in sub])
        crossings[n] = [r.g for r in sub if r.level_crossing]
    fits = {}
    ns = np.array(N_list, dtype=float)
    for series in ("work", "delta_q23"):
        for kind in ("max", "min"):
            pts = [per_n[n].get(series) for n in N_list]
            if all(pts) and len(ns) >= 2:
                fits[f"{series}_{kind}"] = _fit_or_none(ns, [p[f"g_{kind}"] for p in pts])
    out.json(path + ".json", provenance(
        "otto", cfg, tau_h=tau_h, tau_c=tau_c, extrema=per_n, power_laws=fits,
        level_crossings=crossings, metadata=[r.metadata for r in recs[:1]],
    ))


def cmd_fit(cfg, out: Outputs):
    src = cfg.get("input")
    if not src:
        raise ConfigError("missing required key: input")
    try:
        with open(src, newline="") as fh:
            table = list(csv.DictReader(fh))
    except OSError as err:
        raise ConfigError(f"cannot read {src}: {err}") from err
    xcol = _get(cfg, "x", "N", str)
    ycols = _list(cfg, "y", str) or ["g_over_omega"]
    group = cfg.get("group_by")
    cols = set(table[0]) if table else set()
    missing = [c for c in [xcol, *ycols, *([group] if group else [])] if c not in cols]
    if missing:
        raise ConfigError(f"missing columns: {missing}")
    groups: dict = {}
    for row in table:
        groups.setdefault(row[group] if group else None, []).append(row)
    fits = []
    for key, rows in groups.items():
        for ycol in ycols:
            try:
                x = [float(r[xcol]) for r in rows]
                y = [float(r[ycol]) for r in rows]
                fit = power_law_fit(x, y)
            except (ValueError, FitError) as err:
                raise ConfigError(f"cannot fit {ycol} vs {xcol}: {err}") from err
            fits.append({"group": key, "x_column": xcol, "y_column": ycol, "x": x, "y": y, **asdict(fit)})
    out.json(_output(cfg), provenance("fit", cfg, fits=fits))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "discord-scan": cmd_discord_scan,
    "otto": cmd_otto,
    "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rabiqd", description="Multiqubit Rabi discord and Otto-cycle jobs.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", "-c", help="flat YAML file of key: value pairs")
        s.add_argument("--set", "-s", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        s.add_argument("--output", "-o", help="output path (same as output=...)")
        s.add_argument("--threads", type=int, help=f"worker cap (default ${THREADS_ENV} or 1)")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Outputs()
    try:
        cfg = load_config(args.config, args.set)
        if args.output:
            cfg["output"] = args.output
        if args.threads is not None:
            cfg["threads"] = args.threads
        COMMANDS[args.command](cfg, out)
    except ConfigError as err:
        out.discard()
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as err:
        out.discard()
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except BaseException:
        out.discard()
        raise
    return EXIT_OK


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
