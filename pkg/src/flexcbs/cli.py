"""Command-line entry point for solving a single MAPF instance."""

from __future__ import annotations

import argparse
import json
import sys

from .flex import FlexMode
from .highlevel import SolverConfig, Solver
from .map_io import MapFormatError, InstanceError, load_instance
from .oracle import validate

EXIT_SOLVED = 0
EXIT_TIMEOUT = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="flexcbs", description="Bounded-suboptimal MAPF solver")
    ap.add_argument("--map", required=True, help="MovingAI .map file")
    ap.add_argument("--scen", required=True, help="MovingAI .scen file")
    ap.add_argument("--agents", required=True, type=int)
    ap.add_argument("--suboptimality", type=float, default=1.05)
    ap.add_argument("--flex", default="none",
                    choices=[m.value for m in FlexMode])
    ap.add_argument("--lowlevel", default="focal", choices=["focal", "fastar"])
    ap.add_argument("--bypass", action=argparse.BooleanOptionalAction,
                    default=True)
    ap.add_argument("--prioritize", action=argparse.BooleanOptionalAction,
                    default=True)
    ap.add_argument("--symmetry", action=argparse.BooleanOptionalAction,
                    default=True)
    ap.add_argument("--time-limit", type=float, default=60.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="solution output path")
    return ap


def write_solution(path: str, paths) -> None:
    with open(path, "w") as f:
        for p in paths:
            f.write(" ".join(f"({r},{c})" for r, c in p.cells) + "\n")


def metrics_dict(metrics) -> dict:
    return {
        "outcome": metrics.outcome,
        "soc": metrics.soc,
        "lb0": metrics.lb0,
        "lb_final": metrics.lb_final,
        "lbi": metrics.lbi,
        "generated": metrics.generated,
        "expanded": metrics.expanded,
        "depth": metrics.depth,
        "gb_ratio": metrics.gb_ratio,
        "wall_time": metrics.wall_time,
        "violations": metrics.violations,
    }


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.suboptimality < 1.0:
        ap.error("--suboptimality must be >= 1")
    if args.time_limit <= 0:
        ap.error("--time-limit must be positive")
    try:
        instance = load_instance(args.map, args.scen, args.agents)
    except (MapFormatError, InstanceError, OSError) as exc:
        print(f"flexcbs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = SolverConfig(
        w=args.suboptimality, flex_mode=FlexMode(args.flex),
        low_level=args.lowlevel, bypass=args.bypass,
        prioritize=args.prioritize, symmetry=args.symmetry,
        time_limit=args.time_limit, seed=args.seed)
    result = Solver(instance, config).solve()
    if result.paths is not None:
        problems = validate(result.paths, instance)
        if problems:
            print("flexcbs: emitted solution failed validation:",
                  file=sys.stderr)
            for p in problems:
                print(f"  {p}", file=sys.stderr)
            return EXIT_INFEASIBLE
        if args.out:
            write_solution(args.out, result.paths)
    sidecar = (args.out + ".metrics.json") if args.out else None
    if sidecar:
        with open(sidecar, "w") as f:
            json.dump(metrics_dict(result.metrics), f, indent=2)
    else:
        json.dump(metrics_dict(result.metrics), sys.stdout, indent=2)
        print()
    return {"solved": EXIT_SOLVED, "timeout": EXIT_TIMEOUT,
            "infeasible": EXIT_INFEASIBLE}[result.outcome]


if __name__ == "__main__":
    raise SystemExit(main())
