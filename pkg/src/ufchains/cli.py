"""Command line driver.

One subcommand per operation plus ``run``, which executes whole scenario
files as written.  The operation subcommands reuse the scenario file for the
space and cycle declarations but force their own operation, so a single
declaration can be probed several ways:

    ufchains run scenarios/squares-nontrivial.toml
    ufchains verdict scenarios/squares-nontrivial.toml --schedule 20,40,80
    ufchains mean scenarios/squares-nontrivial.toml

Exit status: 0 all conclusive, 2 at least one inconclusive result, 1 on any
error (bad file, violated precondition, resource cap).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from .errors import ScenarioError, UFChainsError
from .scenario import OPERATIONS, load_scenario, run_scenario

__all__ = ["main"]


def _parse_schedule(text: str):
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise ScenarioError(f"--schedule expects comma-separated integers, got {text!r}")


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "radius", None) is not None:
        out["radius"] = args.radius
    if getattr(args, "margin", None) is not None:
        out["margin"] = args.margin
    if getattr(args, "r", None) is not None:
        out["r"] = args.r
    if getattr(args, "cap", None) is not None:
        out["cap"] = str(Fraction(args.cap))
    if getattr(args, "schedule", None) is not None:
        out["schedule"] = _parse_schedule(args.schedule)
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    return out


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--radius", type=int, help="window or sample radius override")
    p.add_argument("--margin", type=int, help="window margin override")
    p.add_argument("--r", type=int, help="edge radius override")
    p.add_argument("--cap", help="edge capacity override (fraction string)")
    p.add_argument("--schedule", help="comma-separated window radii")
    p.add_argument("--seed", type=int, help="seed override for randomized checks")
    p.add_argument("--out", help="output directory root")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ufchains",
        description="exact window computations for bounded chains on coarse spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run scenario files as written")
    run_p.add_argument("scenarios", nargs="+", metavar="SCENARIO")
    run_p.add_argument("--out", help="output directory root")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel scenarios")

    for op in OPERATIONS:
        p = sub.add_parser(op, help=f"run the {op} operation on a scenario file")
        p.add_argument("scenario", metavar="SCENARIO")
        _add_common_flags(p)
    return parser


def _run_one(path: str, operation: str | None, out_root, overrides: dict):
    scenario = load_scenario(path)
    if operation is not None and scenario.operation != operation:
        scenario = dataclasses.replace(scenario, operation=operation)
    return run_scenario(scenario, out_root=out_root, overrides=overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            jobs = max(1, args.jobs)
            results = []
            if jobs == 1:
                for path in args.scenarios:
                    results.append(_run_one(path, None, args.out, {}))
            else:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    futures = [
                        pool.submit(_run_one, path, None, args.out, {})
                        for path in args.scenarios
                    ]
                    results = [f.result() for f in futures]
            for res in results:
                print(f"{res.name}\t{res.operation}\t{res.summary}")
            return max((r.exit_code for r in results), default=0)
        res = _run_one(args.scenario, args.command, args.out, _overrides(args))
        print(f"{res.name}\t{res.operation}\t{res.summary}")
        for rel in res.outputs:
            print(f"wrote\t{rel}")
        return res.exit_code
    except UFChainsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
