"""
Per-operation cost of DynConn updates and Glauber steps across graph sizes.

Usage:
    python3 scripts/bench_scaling.py [--sizes 1000 10000 100000] [--ops 20000] [--repeats 3] [--seed 0]

Prints CSV rows ``target,n,m,ops,best_us_per_op,ratio_to_smallest``.  The
best of ``--repeats`` runs is kept to damp scheduler noise.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from isingfield.bench import bench_dynconn, bench_glauber


@dataclass
class Config:
    sizes: tuple[int, ...] = (1000, 10000, 100000)
    ops: int = 20000
    repeats: int = 3
    seed: int = 0


def run(cfg: Config) -> list[str]:
    rows = ["target,n,m,ops,best_us_per_op,ratio_to_smallest"]
    for target, fn in (("dynconn", bench_dynconn), ("glauber", bench_glauber)):
        base = None
        for i, n in enumerate(cfg.sizes):
            runs = [fn(n, cfg.ops, np.random.default_rng([cfg.seed, i, r])) for r in range(cfg.repeats)]
            best = min(runs, key=lambda row: row.us_per_op)
            base = base or best.us_per_op
            rows.append(f"{target},{n},{best.m},{cfg.ops},{best.us_per_op:.2f},{best.us_per_op / base:.2f}")
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    ap.add_argument("--ops", type=int, default=Config.ops)
    ap.add_argument("--repeats", type=int, default=Config.repeats)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    print("\n".join(run(Config(tuple(a.sizes), a.ops, a.repeats, a.seed))))


if __name__ == "__main__":
    main()
