"""Normalized 1D Neumann spectra: two patches with and without penalty vs one smooth patch.

    python scripts/outlier_spectra.py [--degree 2] [--elements 100] [--C 100]
"""
import argparse

import numpy as np

from hybridmortar.assembly import PenaltyConfig
from hybridmortar.multipatch import make_preset
from hybridmortar.solvers import laplace_1d_exact, solve_laplace_eigen

ap = argparse.ArgumentParser()
ap.add_argument("--degree", type=int, default=2)
ap.add_argument("--elements", type=int, default=100)
ap.add_argument("--C", type=float, default=100.0)
args = ap.parse_args()

exact = laplace_1d_exact(args.elements + args.degree + 1)
cases = {
    "2 patches, C=0": ("unit-line-2patch", 0.0),
    f"2 patches, C={args.C:g}": ("unit-line-2patch", args.C),
    "1 smooth patch": ("unit-line-1patch", 0.0),
}
for label, (preset, C) in cases.items():
    mp = make_preset(preset, args.degree, args.elements, "N")
    s = solve_laplace_eigen(mp, PenaltyConfig.uniform(C, 1), exact=exact)
    z = s.normalized
    print(f"{label:22s} physical {s.physical_count:4d}  filtered {len(s.spurious):2d}  "
          f"max {z.max():.4f}  at n = {int(np.argmax(z)) + 1}")
