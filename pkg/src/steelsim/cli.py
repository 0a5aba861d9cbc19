"""Command line: ``steelsim list`` and ``steelsim run``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .errors import SteelsimError
from .explorer import REGISTRY, explore, get_program, parse_strategy, replay
from .semantics.interpreter import Violation


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steelsim", description="Run and explore checked concurrent programs.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("list", help="list registered programs")
    run = sub.add_parser("run", help="explore a program under a scheduling strategy")
    run.add_argument("program")
    run.add_argument("--strategy", default="exhaustive",
                     help="tape:<bits> | random:<seed>:<n> | exhaustive (default)")
    run.add_argument("--depth", type=int, default=20, help="exhaustive depth bound in tape bits")
    run.add_argument("--no-dedup", action="store_true", help="disable state deduplication")
    run.add_argument("--json", metavar="PATH", help="write the report as JSON ('-' for stdout)")
    rp = sub.add_parser("replay", help="re-run a program on a fixed tape and print the outcome")
    rp.add_argument("program")
    rp.add_argument("tape", nargs="?", default="")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    if args.cmd == "list":
        from . import programs  # noqa: F401

        for name in sorted(REGISTRY):
            print(f"{name:22s} {REGISTRY[name].description}")
        return 0
    try:
        prog = get_program(args.program)
    except SteelsimError as e:
        print(f"steelsim: {e}", file=sys.stderr)
        return 2
    if args.cmd == "replay":
        try:
            out = replay(prog, args.tape)
        except ValueError as e:
            print(f"steelsim: {e}", file=sys.stderr)
            return 2
        if isinstance(out, Violation):
            print(out.report.to_json())
            return 1
        print(type(out).__name__, getattr(out, "value", ""))
        return 0
    try:
        strategy = parse_strategy(args.strategy, args.depth)
        if args.no_dedup and hasattr(strategy, "dedup"):
            strategy = type(strategy)(strategy.max_depth, dedup=False)
    except ValueError as e:
        print(f"steelsim: {e}", file=sys.stderr)
        return 2
    report = explore(prog, strategy)
    print(report.summary())
    for r in report.reports[:5]:
        print(f"  violation {r.kind} at step {r.step_index} ({r.node_path or '-'}), tape={r.tape!r}: {r.message}")
    if args.json:
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
        if args.json == "-":
            print(text)
        else:
            with open(args.json, "w") as f:
                f.write(text + "\n")
    return 1 if report.violations else 0


if __name__ == "__main__":
    sys.exit(main())
