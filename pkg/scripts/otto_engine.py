"""Otto engine with a multiqubit Rabi working substance.

Two passes: a dense work-only scan for N in ``--N`` (extrema and power laws of
their locations), then stage discords on a coarser grid for ``--discord-N``
(where the cold-isochore discord drop bottoms out against the work peak).

    python scripts/otto_engine.py --out results/otto
"""
import argparse
from pathlib import Path

import numpy as np

from common import OttoConfig, SearchConfig, write_csv, write_json
from rabiqd.analysis import locate_extremum, power_law_fit
from rabiqd.model import TAU_C, ModelParams
from rabiqd.otto import CycleSpec, work_scan


def _template(cfg: OttoConfig):
    return CycleSpec(ModelParams.homogeneous(1, 0.0, n_max=2), 0.0, omega_h=cfg.omega_h, omega_c=cfg.omega_c,
                     tau_h=cfg.hot_over_cold * TAU_C, tau_c=TAU_C)


def work_pass(cfg: OttoConfig, out: Path) -> dict:
    grid = cfg.work_grid.values()
    recs = work_scan(_template(cfg), grid, cfg.N_list, discord=False)
    write_csv(out / "work.csv", ["N", "g_over_omega", "work", "q_hot", "q_cold", "level_crossing"],
              [[r.N, r.g, r.work, r.q_hot, r.q_cold, int(r.level_crossing)] for r in recs])
    loc = {"max": [], "min": []}
    for N in cfg.N_list:
        w = np.array([r.work for r in recs if r.N == N])
        for kind in loc:
            e = locate_extremum(grid, w, kind)
            loc[kind].append(e.g_star)
        print(f"N={N}: W max at g/w={loc['max'][-1]:.4f}, min at {loc['min'][-1]:.4f}", flush=True)
    fits = {}
    for kind, gs in loc.items():
        f = power_law_fit(cfg.N_list, gs)
        fits[kind] = {"g": gs, "exponent": f.exponent, "prefactor": f.prefactor, "r_squared": f.r_squared}
        print(f"W {kind}: g ~ N^{f.exponent:.3f}, R^2={f.r_squared:.4f}")
    return fits


def discord_pass(cfg: OttoConfig, out: Path) -> dict:
    grid = cfg.discord_grid.values()
    recs = work_scan(_template(cfg), grid, cfg.discord_N, cfg.search.optimizer())
    write_csv(out / "discord.csv",
              ["N", "g_over_omega", "work", "Q1", "Q2", "Q3", "Q4", "delta_q14", "delta_q23"],
              [[r.N, r.g, r.work, *r.discord_stage, r.delta_q_14, r.delta_q_23] for r in recs])
    summary, dq = {}, {"max": [], "min": []}
    for N in cfg.discord_N:
        sub = [r for r in recs if r.N == N]
        i_w = int(np.argmax([r.work for r in sub]))
        d23 = np.array([r.delta_q_23 for r in sub])
        i_q = int(np.argmin(d23))
        for kind in dq:
            dq[kind].append(locate_extremum(grid, d23, kind).g_star)
        summary[N] = {"g_work_max": grid[i_w], "g_dq23_min": grid[i_q], "grid_steps_apart": abs(i_w - i_q)}
        print(f"N={N}: W max at {grid[i_w]:.3f}, dQ23 min at {grid[i_q]:.3f}", flush=True)
    if len(cfg.discord_N) >= 2:
        for kind, gs in dq.items():
            f = power_law_fit(cfg.discord_N, gs)
            summary[f"dq23_{kind}_fit"] = {"g": gs, "exponent": f.exponent, "r_squared": f.r_squared}
            print(f"dQ23 {kind}: g ~ N^{f.exponent:.3f}, R^2={f.r_squared:.4f}")
    return summary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/otto"))
    ap.add_argument("--N", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--discord-N", type=int, nargs="*", default=[1, 2, 3])
    ap.add_argument("--hops", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=2)
    args = ap.parse_args()
    cfg = OttoConfig(N_list=args.N, discord_N=args.discord_N, search=SearchConfig(args.hops, args.restarts))
    payload = {"work_fits": work_pass(cfg, args.out)}
    if cfg.discord_N:
        payload["discord"] = discord_pass(cfg, args.out)
    write_json(args.out / "summary.json", cfg, payload)


if __name__ == "__main__":
    main()
