"""Command line entry point: ``milstroud run|gen|validate <config>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bags import validate_dataset
from .data import SyntheticSpec, generate_synthetic, write_dataset
from .errors import ConfigurationError, DataError
from .grid import load_config, load_data, run_grid

EXIT_CONFIG = 2
EXIT_DATA = 3


def _out(args, cfg):
    if args.out:
        return Path(args.out)
    base = Path(cfg.get("_base", "."))
    return base / cfg.get("output_dir", "out")


def cmd_run(args, cfg):
    summary = run_grid(cfg, _out(args, cfg), jobs=args.jobs)
    for key, b in sorted(summary["best"].items()):
        print(f"{key:20s} best AUC {b['auc']:.4f}  ({b['cell']})")
    failed = [c for c in summary["cells"] if "error" in c]
    if failed:
        print(f"{len(failed)} cell(s) failed; see summary.json", file=sys.stderr)
    return 0


def cmd_gen(args, cfg):
    if "synthetic" not in cfg["data"]:
        raise ConfigurationError("gen needs a data.synthetic section")
    d = generate_synthetic(SyntheticSpec(**cfg["data"]["synthetic"]))
    train, test = write_dataset(d, _out(args, cfg))
    print(f"wrote {train} and {test}")
    return 0


def cmd_validate(args, cfg):
    d = load_data(cfg)
    problems = validate_dataset(d)
    for p in problems:
        print(p)
    if problems:
        return EXIT_DATA
    print(f"ok: {len(d.training_bags)} training bags, {len(d.test_bags)} test bags, dim {d.feature_dim}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="milstroud", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("gen", cmd_gen), ("validate", cmd_validate)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--jobs", type=int, default=1, help="grid cells run in parallel")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args, cfg)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
