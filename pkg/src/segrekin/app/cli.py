"""Command line interface.

    segrekin <experiment> --config <path> [--out <dir>] [--seed <u64>]
             [--threads <n>] [--figures]

The thread count (flag or SEGREKIN_THREADS) only affects how the collision
kernels parallelize; results are bitwise identical for any value because
all reductions are chunk-ordered.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

# numba probes TBB at import; older sandbox TBB triggers a fallback notice
warnings.filterwarnings("ignore", message=".*TBB.*")

from segrekin.app.config import EXPERIMENTS, ConfigError, parse_config
from segrekin.app.experiments import run_experiment


def set_threads(n: int | None):
    if n is None:
        env = os.environ.get("SEGREKIN_THREADS")
        if env is None:
            return
        n = int(env)
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segrekin",
        description="Binary-mixture kinetic and hydrodynamic experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--figures", action="store_true",
                       help="render PNG figures alongside the CSV output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out if args.out is not None else Path("segrekin-out") / args.experiment
    try:
        set_threads(args.threads)
        text = args.config.read_text(encoding="utf-8")
        cfg = parse_config(text, args.experiment)
        if args.figures:
            cfg.values["output.figures"] = True
            cfg.echo["output.figures"] = True
        manifest = run_experiment(cfg, out_dir, seed=args.seed)
    except (ConfigError, FileNotFoundError) as err:
        _emit_error(out_dir, args.experiment, err)
        return 2
    except Exception as err:  # noqa: BLE001 - the CLI boundary reports all
        _emit_error(out_dir, args.experiment, err)
        return 1
    print(f"{args.experiment}: ok ({len(manifest.files)} files in {out_dir})")
    return 0


def _emit_error(out_dir: Path, experiment: str, err: Exception):
    record = {
        "experiment": experiment,
        "error": type(err).__name__,
        "message": str(err),
    }
    sys.stderr.write(json.dumps(record) + "\n")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "error.json", "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2)
            fh.write("\n")
    except OSError:
        pass


if __name__ == "__main__":
    raise SystemExit(main())
