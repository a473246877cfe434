"""Command line entry point: ``hybridmortar run|presets|--version``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import ConfigError, config_echo, parse_config, run_experiment
from .multipatch import list_presets

try:
    import tomllib
except ImportError:          # Python < 3.11
    import tomli as tomllib

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
log = logging.getLogger("hybridmortar")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if np.isnan(v) else "%.17g" % v


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_csv(table) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_outputs(result, cfg, out: Path, *, timings: bool = True) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, table in sorted(result.tables.items()):
        path = out / f"{stem}.csv"
        atomic_write(path, table_csv(table))
        written.append(path)
    meta = {"version": __version__, "config": config_echo(cfg), "dims": result.dims,
            "summary": result.summary}
    if timings:
        meta["timings"] = result.timings
    atomic_write(out / "run.json", json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    written.append(out / "run.json")
    return written


def _setup_logging():
    level = os.environ.get("HYBRIDMORTAR_LOG", "error").lower()
    if level not in LOG_LEVELS:
        print(f"warning: HYBRIDMORTAR_LOG={level!r} not in {sorted(LOG_LEVELS)}; using 'error'",
              file=sys.stderr)
        level = "error"
    logging.basicConfig(level=LOG_LEVELS[level], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _cmd_run(args) -> int:
    try:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except tomllib.TOMLDecodeError as exc:
        print(f"error: invalid TOML in {args.config}: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(data)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.out or Path("results") / Path(args.config).stem)
    if args.threads is not None:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=args.threads):
            result = run_experiment(cfg)
    else:
        result = run_experiment(cfg)
    for path in write_outputs(result, cfg, out):
        log.info("wrote %s", path)
    print(out)
    return 0


def _cmd_presets(args) -> int:
    for name, desc in list_presets():
        print(f"{name:26s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridmortar",
                                 description="Penalized mortar isogeometric experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a TOML config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default: results/<config stem>)")
    run.add_argument("--threads", type=int, help="BLAS/LAPACK thread limit")
    run.set_defaults(func=_cmd_run)
    pre = sub.add_parser("presets", help="list built-in geometries")
    pre.set_defaults(func=_cmd_presets)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except Exception as exc:          # numerical failures surface as one line
        log.debug("traceback", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
