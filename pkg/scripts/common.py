"""Shared experiment configuration and output helpers for the scripts."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from rabiqd.analysis import default_grid
from rabiqd.model import TAU_C
from rabiqd.optimizer import OptimizerConfig


@dataclass
class GridConfig:
    lo: float = 0.01
    hi: float = 2.0
    points: int = 60
    spacing: str = "log"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return default_grid(self.points, self.lo, self.hi)
        return np.linspace(self.lo, self.hi, self.points)


@dataclass
class SearchConfig:
    n_hops: int = 5
    n_restarts: int = 2
    master_seed: int = 0

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            n_hops=self.n_hops, n_restarts=self.n_restarts, master_seed=self.master_seed, local_method="auto"
        )


@dataclass
class ThermalDiscordConfig:
    N_list: list[int] = field(default_factory=lambda: [1, 2, 3])
    temperatures: list[float] = field(default_factory=lambda: [1.0, 5.0, 10.0])  # multiples of T_c
    omega_q: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)
    search: SearchConfig = field(default_factory=SearchConfig)

    def taus(self):
        return [t * TAU_C for t in self.temperatures]


@dataclass
class ReducedPartitionConfig:
    N_list: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    temperatures: list[float] = field(default_factory=lambda: [1.0, 5.0, 10.0])
    grid: GridConfig = field(default_factory=lambda: GridConfig(points=30))
    search: SearchConfig = field(default_factory=SearchConfig)


@dataclass
class OttoConfig:
    N_list: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    omega_h: float = 2.0
    omega_c: float = 1.0
    hot_over_cold: float = 9.0
    work_grid: GridConfig = field(default_factory=lambda: GridConfig(0.01, 2.0, 200, "linear"))
    discord_N: list[int] = field(default_factory=lambda: [1, 2, 3])
    discord_grid: GridConfig = field(default_factory=lambda: GridConfig(0.05, 1.5, 30, "linear"))
    search: SearchConfig = field(default_factory=SearchConfig)


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([[format(v, ".17g") if isinstance(v, float) else v for v in r] for r in rows])


def write_json(path: Path, cfg, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = {"config": asdict(cfg), **payload}
    path.write_text(json.dumps(blob, indent=2, default=lambda x: x.tolist() if hasattr(x, "tolist") else str(x)) + "\n")
