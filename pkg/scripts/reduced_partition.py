"""Discord between one qubit and the remaining N-1 qubits, field traced out.

Fits the maximum location against N-1 for each temperature.

    python scripts/reduced_partition.py --out results/reduced
"""
import argparse
from pathlib import Path

from common import GridConfig, ReducedPartitionConfig, SearchConfig, write_csv, write_json
from rabiqd.analysis import discord_scan, power_law_fit, record_extremum
from rabiqd.model import TAU_C, ModelParams


def run(cfg: ReducedPartitionConfig, out: Path):
    grid, opt = cfg.grid.values(), cfg.search.optimizer()
    rows, fits = [], {}
    for T in cfg.temperatures:
        g_star = []
        for N in cfg.N_list:
            rec = discord_scan(ModelParams.homogeneous(N, 0.0, n_max=2), T * TAU_C, grid, "one-vs-rest", opt)
            rows += [[N, T, g, q] for g, q in zip(rec.g_over_omega, rec.discord)]
            e = record_extremum(rec)
            g_star.append(e.g_star)
            print(f"T={T}Tc N={N}: max Q={e.value:.4f} at g/w={e.g_star:.4f}", flush=True)
        f = power_law_fit([n - 1 for n in cfg.N_list], g_star)
        fits[str(T)] = {"g_max": g_star, "exponent": f.exponent, "prefactor": f.prefactor, "r_squared": f.r_squared}
        print(f"T={T}Tc: g_max ~ (N-1)^{f.exponent:.3f}, R^2={f.r_squared:.4f}")
    write_csv(out / "scans.csv", ["N", "T_over_Tc", "g_over_omega", "discord"], rows)
    write_json(out / "summary.json", cfg, {"fits_vs_N_minus_1": fits})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/reduced"))
    ap.add_argument("--N", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--points", type=int, default=30)
    ap.add_argument("--hops", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=2)
    args = ap.parse_args()
    cfg = ReducedPartitionConfig(N_list=args.N, grid=GridConfig(points=args.points),
                                 search=SearchConfig(args.hops, args.restarts))
    run(cfg, args.out)


if __name__ == "__main__":
    main()
