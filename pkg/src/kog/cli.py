"""Command line entry point: ``kog {check,run,explore,trace} FILE``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import rtcheck
from . import runtime as R
from . import syntax as S
from .errors import ParseError
from .parser import parse

EXIT_STATIC = 1
EXIT_VIOLATION = 3


def _positive(text: str) -> int:
    value = int(float(text))
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--max-steps", type=_positive, default=100_000)
    common.add_argument("--depth", type=_positive, default=500)
    common.add_argument("--state-bound", type=_positive, default=1_000_000)
    common.add_argument("--policy", choices=["random", "round-robin"], default="random")
    common.add_argument("--check-types", action="store_true",
                        help="re-check runtime typing at every step or state")
    common.add_argument("--unsafe", action="store_true", help="run even if static checking fails")
    common.add_argument("--json", metavar="PATH", help="write a JSON trace or report")
    common.add_argument("--timing", action="store_true", help="report elapsed time on stderr")

    ap = argparse.ArgumentParser(prog="kog", description="Checker and interpreter for a language of objects and groups.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="parse and type-check a program")
    sub.add_parser("run", parents=[common], help="execute one schedule")
    sub.add_parser("explore", parents=[common], help="enumerate every interleaving")
    sub.add_parser("trace", parents=[common], help="execute and emit the JSON trace")
    return ap


def load(path: str, unsafe: bool, out=None, check_only: bool = False):
    """Parse and type-check. Returns (program, exit code or None)."""
    out = out or sys.stdout
    with open(path) as fh:
        text = fh.read()
    try:
        program = parse(text)
    except ParseError as exc:
        print(exc.render(path), file=out)
        return None, EXIT_STATIC
    from .typecheck import type_program

    errors = type_program(program)
    for err in errors:
        print(err.render(path), file=out)
    if errors and (not unsafe or check_only):
        return program, EXIT_STATIC
    return program, None


def summarize_groups(cfg: R.Configuration) -> list[str]:
    lines = []
    for g, exports in cfg.groups.items():
        names = ", ".join(sorted(R.intf(cfg.program, exports)))
        lines.append(f"{g}: intf {{{names}}}")
    return lines


def final_record(result: R.RunResult) -> dict:
    cfg = result.final
    objects = {}
    for o in cfg.objects.values():
        objects[o.id] = {
            "class": o.cls,
            "idle": o.idle,
            "active": R.render_active(cfg, o.id),
            "fields": {k: S.render_value(v) for k, (_, v) in sorted(o.fields.items())},
        }
    groups = {}
    for g, exports in cfg.groups.items():
        groups[g] = {
            "exports": [[S.render_value(v), i] for v, i in sorted(exports, key=R._entry_key)],
            "intf": sorted(R.intf(cfg.program, exports)),
        }
    return {
        "outcome": result.outcome,
        "steps": len(result.steps),
        "objects": objects,
        "groups": groups,
        "diagnosis": result.diagnosis,
    }


def trace_json(result: R.RunResult) -> str:
    doc = {"steps": [s.to_json() for s in result.steps], "final": final_record(result)}
    return json.dumps(doc, indent=2) + "\n"


def _run(args, program) -> int:
    found: list = []
    on_step = None
    if args.check_types:
        found.extend(rtcheck.check_state(R.initial_configuration(program)))

        def on_step(before, t, after):
            found.extend(rtcheck.step_violations(before, t, after))
            found.extend(rtcheck.check_state(after))

    result = R.run(program, policy=args.policy, seed=args.seed, max_steps=args.max_steps, on_step=on_step)
    if args.command == "trace":
        text = trace_json(result)
        if args.json:
            with open(args.json, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return result.exit_code
    print(f"outcome: {result.outcome} after {len(result.steps)} steps")
    for line in summarize_groups(result.final):
        print(line)
    for line in result.diagnosis:
        print(line)
    if args.check_types:
        print(f"violations: {len(found)}")
        for v in found[:20]:
            print(f"  {v.rule} at {v.location}: {v.message}")
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(trace_json(result))
    if found and result.exit_code == 0:
        return EXIT_VIOLATION
    return result.exit_code


def _explore(args, program) -> int:
    if args.check_types:
        report = rtcheck.explore_harness(program, depth=args.depth, state_bound=args.state_bound)
        states, transitions, truncated = report.states, report.steps, report.truncated
        outcomes, violations = report.outcomes, report.violations
        payload = report.to_json()
    else:
        res = R.explore(program, depth=args.depth, state_bound=args.state_bound)
        states, transitions, truncated = res.states_visited, res.transitions, res.truncated
        outcomes, violations = dict(res.outcomes), []
        payload = {"states-checked": states, "transitions-checked": transitions,
                   "violations": [], "truncated": truncated}
    print(f"states: {states}")
    print(f"transitions: {transitions}")
    print(f"truncated: {str(truncated).lower()}")
    for name in sorted(outcomes):
        print(f"terminal {name}: {outcomes[name]}")
    if args.check_types:
        print(f"violations: {len(violations)}")
        for v in violations[:20]:
            print(f"  {v.rule} at {v.location}: {v.message}")
            print(f"    path: {' '.join(str(t) for t in v.path)}")
    if args.json:
        payload["outcomes"] = outcomes
        with open(args.json, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return EXIT_VIOLATION if violations else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if os.environ.get("KOG_SEED"):
        args.seed = _seed(os.environ["KOG_SEED"])
    started = time.perf_counter()
    try:
        program, code = load(args.file, args.unsafe, check_only=args.command == "check")
    except OSError as exc:
        print(f"kog: {exc}", file=sys.stderr)
        return EXIT_STATIC
    if code is None:
        if args.command == "check":
            print("ok")
            code = 0
        elif args.command == "explore":
            code = _explore(args, program)
        else:
            code = _run(args, program)
    if args.timing:
        print(f"elapsed: {time.perf_counter() - started:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
