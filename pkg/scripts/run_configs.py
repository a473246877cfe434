"""Run every TOML file in scripts/configs (or the ones given) through the CLI.

    python scripts/run_configs.py [--out results] [config.toml ...]
"""
import argparse
import sys
from pathlib import Path

from hybridmortar.cli import main

HERE = Path(__file__).resolve().parent

ap = argparse.ArgumentParser()
ap.add_argument("configs", nargs="*")
ap.add_argument("--out", default="results")
args = ap.parse_args()

configs = [Path(c) for c in args.configs] or sorted((HERE / "configs").glob("*.toml"))
status = 0
for cfg in configs:
    print(f"== {cfg.name}", flush=True)
    status |= main(["run", str(cfg), "--out", str(Path(args.out) / cfg.stem)])
sys.exit(status)
