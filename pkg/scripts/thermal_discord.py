"""Field-vs-qubits discord of the Gibbs state over coupling, temperature and N.

Writes the scans, the maximum location per (N, T) and a power law of the
maximum location against N for each temperature.  ``--omega-q 10`` and
``--omega-q 20`` give the dispersive-qubit runs.

    python scripts/thermal_discord.py --out results/thermal
"""
import argparse
from pathlib import Path

from common import GridConfig, SearchConfig, ThermalDiscordConfig, write_csv, write_json
from rabiqd.analysis import FitError, discord_scan, power_law_fit, record_extremum
from rabiqd.model import ModelParams


def run(cfg: ThermalDiscordConfig, out: Path):
    grid, opt = cfg.grid.values(), cfg.search.optimizer()
    rows, extrema, fits = [], [], {}
    for T, tau in zip(cfg.temperatures, cfg.taus()):
        g_star = []
        for N in cfg.N_list:
            tpl = ModelParams.homogeneous(N, 0.0, n_max=2, omega_q=cfg.omega_q, basis="dicke" if N > 1 else "full")
            rec = discord_scan(tpl, tau, grid, "field", opt)
            rows += [[N, T, g, q] for g, q in zip(rec.g_over_omega, rec.discord)]
            e = record_extremum(rec)
            extrema.append({"N": N, "T_over_Tc": T, "g_max": e.g_star, "Q_max": e.value, "boundary": e.boundary})
            g_star.append(e.g_star)
            print(f"T={T}Tc N={N}: max Q={e.value:.4f} at g/w={e.g_star:.4f}", flush=True)
        try:
            f = power_law_fit(cfg.N_list, g_star)
            fits[str(T)] = {"exponent": f.exponent, "prefactor": f.prefactor, "r_squared": f.r_squared}
            print(f"T={T}Tc: g_max ~ N^{f.exponent:.3f}, R^2={f.r_squared:.4f}")
        except FitError as err:
            fits[str(T)] = str(err)
    write_csv(out / "scans.csv", ["N", "T_over_Tc", "g_over_omega", "discord"], rows)
    write_json(out / "summary.json", cfg, {"extrema": extrema, "fits_vs_N": fits})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/thermal"))
    ap.add_argument("--N", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--temperatures", type=float, nargs="+", default=[1.0, 5.0, 10.0], help="multiples of T_c")
    ap.add_argument("--omega-q", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=60)
    ap.add_argument("--hops", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=2)
    args = ap.parse_args()
    cfg = ThermalDiscordConfig(
        args.N, args.temperatures, args.omega_q, GridConfig(points=args.points),
        SearchConfig(args.hops, args.restarts),
    )
    run(cfg, args.out)


if __name__ == "__main__":
    main()
