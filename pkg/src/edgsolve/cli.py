"""Command-line entry points: ``convergence`` and ``dofs``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    RunConfig,
    dofs_to_markdown,
    report_to_csv,
    report_to_markdown,
    run_convergence,
    run_dof_comparison,
)
from .problems import PROBLEMS


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgsolve", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-level progress")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convergence", help="run a refinement study")
    conv.add_argument("--config", help="key=value run configuration; flags override it")
    conv.add_argument("--method", choices=("edg", "hdg"))
    conv.add_argument("--k", type=int)
    conv.add_argument("--mesh", help="tri, quad or a mesh file (may contain {n})")
    conv.add_argument("--levels", type=_int_list)
    conv.add_argument("--solver", choices=("direct", "cg"))
    conv.add_argument("--tol", type=float)
    conv.add_argument("--penalty", choices=("edge", "diameter"))
    conv.add_argument("--norm", choices=("relative", "absolute"))
    conv.add_argument("--cell-exactness", type=int, dest="cell_exactness")
    conv.add_argument("--edge-npoints", type=int, dest="edge_npoints")
    conv.add_argument("--problem", default="sinsin", choices=sorted(PROBLEMS))
    conv.add_argument("--dump-matrix", dest="dump_matrix", metavar="PATH")
    conv.add_argument("--csv", metavar="PATH")
    conv.add_argument("--md", metavar="PATH")
    conv.add_argument("--save-config", metavar="PATH", help="write the effective configuration")

    dofs = sub.add_parser("dofs", help="compare trace dof counts with the reference table")
    dofs.add_argument("--k", type=_int_list, default=(0, 1, 2))
    dofs.add_argument("--levels", type=_int_list, default=(4, 8, 16, 32, 64))
    dofs.add_argument("--md", metavar="PATH")
    return parser


_CONFIG_KEYS = ("method", "k", "mesh", "levels", "solver", "tol", "penalty", "norm",
                "cell_exactness", "edge_npoints", "csv", "md", "dump_matrix")


def _config_from_args(args) -> RunConfig:
    base = RunConfig.load(args.config) if args.config else RunConfig()
    kw = {key: getattr(base, key) for key in _CONFIG_KEYS}
    for key in _CONFIG_KEYS:
        value = getattr(args, key)
        if value is not None:
            kw[key] = value
    return RunConfig(**kw)


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)


def cmd_convergence(args) -> int:
    config = _config_from_args(args)
    if args.save_config:
        config.save(args.save_config)
    report = run_convergence(config, PROBLEMS[args.problem]())
    md = report_to_markdown(report)
    _emit(report_to_csv(report), config.csv)
    _emit(md, config.md)
    sys.stdout.write(md)
    return 0


def cmd_dofs(args) -> int:
    rows = run_dof_comparison(args.k, args.levels)
    md = dofs_to_markdown(rows)
    _emit(md, args.md)
    sys.stdout.write(md)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "convergence":
            return cmd_convergence(args)
        return cmd_dofs(args)
    except Exception as exc:
        print(f"edgsolve {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
