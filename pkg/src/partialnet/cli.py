"""Command-line interface: ``partialnet {simulate,infer,evaluate,experiment}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import DEFAULT_CAP_GRID, ENV_PREFIX, load_config
from .exceptions import PartialNetError

LOGGER = logging.getLogger("partialnet")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _cap_grid(text: str) -> list[int] | str:
    return "default" if text.strip().lower() == "default" else _int_list(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (keys as in ExperimentConfig)")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--seed", dest="master_seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--mode", choices=["full", "local", "auto"])
    common.add_argument("--engine", choices=["classical", "bayesian", "both"])
    common.add_argument("--desk-scale", action="store_true", help="p=20, n=10,50,100,200, 50 trees")
    common.add_argument("--p", type=int, help="number of variables")
    common.add_argument("--n", dest="n_list", type=_int_list, help="comma-separated sample sizes")
    common.add_argument("--trees", dest="tree_count", type=int, help="replicates per sample size")
    common.add_argument("--draws", dest="mc_draws", type=int, help="posterior draws per pair")
    common.add_argument(
        "--cap-sweep",
        type=_cap_grid,
        help="comma-separated neighborhood caps to sweep, or 'default' for 2,5,10,20 and n/10",
    )
    common.add_argument("--jobs", type=int, help="worker processes (0 = all cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="partialnet",
        description="Partial-correlation network inference experiments.",
        epilog=f"Every config key can also be set through an environment variable "
        f"{ENV_PREFIX}<KEY>, e.g. {ENV_PREFIX}TREE_COUNT=10.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate trees and pilot/study datasets")
    sub.add_parser("infer", parents=[common], help="score simulated datasets")
    sub.add_parser("evaluate", parents=[common], help="ROC/AUC summaries and plots")
    sub.add_parser("experiment", parents=[common], help="simulate, infer and evaluate")
    return parser


def _config_from_args(args: argparse.Namespace):
    overrides = {
        key: getattr(args, key)
        for key in ("output_dir", "master_seed", "mode", "p", "n_list", "tree_count", "mc_draws", "cap_sweep", "jobs")
    }
    if overrides["cap_sweep"] == "default":
        overrides["cap_sweep"] = DEFAULT_CAP_GRID
        overrides["cap_sweep_tenth"] = True
    if args.engine is not None:
        overrides["engines"] = ["classical", "bayesian"] if args.engine == "both" else [args.engine]
    return load_config(args.config, desk_scale=args.desk_scale, overrides=overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = _config_from_args(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"partialnet: configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "simulate":
            pipeline.cmd_simulate(config)
            ok = True
        elif args.command == "infer":
            ok = not pipeline.cmd_infer(config)["failures"]
        elif args.command == "evaluate":
            summary = pipeline.cmd_evaluate(config)
            print(json.dumps(summary["results"], indent=1))
            ok = True
        else:
            summary, ok = pipeline.cmd_experiment(config)
            print(json.dumps(summary["results"], indent=1))
    except (PartialNetError, OSError) as exc:
        print(f"partialnet: {exc}", file=sys.stderr)
        return 1
    if not ok:
        print("partialnet: some replicates failed; see manifest.json", file=sys.stderr)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
