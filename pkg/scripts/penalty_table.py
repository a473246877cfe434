"""Plate L2 errors for the penalty sweep C in {1, 1e2, 1e4, 1e6}, one row per C.

    python scripts/penalty_table.py [--levels 5] [--degree 3]
"""
import argparse

import numpy as np

from hybridmortar.experiments import parse_config, run_experiment

ap = argparse.ArgumentParser()
ap.add_argument("--levels", type=int, default=5)
ap.add_argument("--degree", type=int, default=3)
args = ap.parse_args()

cfg = parse_config({"kind": "plate-convergence", "degree": args.degree, "levels": args.levels,
                    "penalty": {"sweep": True}})
res = run_experiment(cfg)
first = next(iter(res.tables.values()))
print("C \\ ndof " + " ".join(f"{r[2]:>10d}" for r in first.rows))
errs = []
for C in cfg.penalties:
    row = [r[3] for r in res.tables[f"convergence-C{C:g}"].rows]
    errs.append(row)
    print(f"{C:9.0e} " + " ".join(f"{e:10.2e}" for e in row))
errs = np.array(errs)
print("max/min per level:", " ".join(f"{x:.2f}" for x in errs.max(0) / errs.min(0)))
