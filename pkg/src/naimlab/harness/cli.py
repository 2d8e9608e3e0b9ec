"""Command line: ``naimlab list | run <spec-id|all> | report <spec-id>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..objectives import OBJECTIVES, get_objective
from .core import RunContext, SpecError, load_specs, run
from .experiments import SCHEMES


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--seed", type=int, default=None, help="override the seed of every spec")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every error tolerance by this factor (default: 1)")
    common.add_argument("--config", default=None, help="JSON list of specs (default: bundled config)")

    p = argparse.ArgumentParser(prog="naimlab", description="Run and inspect acceleration experiments.")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("list", parents=[common], help="enumerate objectives, schemes and specs")
    r = sub.add_parser("run", parents=[common], help="run one spec or all of them")
    r.add_argument("target", help="spec id or 'all'")
    rep = sub.add_parser("report", parents=[common], help="print the stored summary of a spec")
    rep.add_argument("spec_id")
    return p


def _cmd_list(args) -> int:
    print("objectives:")
    for oid in OBJECTIVES:
        o = get_objective(oid)
        print(f"  {oid:<16} dim={o.dim:<4} mu={o.mu:<10.4g} L={o.L:.4g}")
    print("schemes:")
    for name in SCHEMES:
        print(f"  {name}")
    print("specs:")
    for s in load_specs(args.config):
        print(f"  {s.id:<22} {s.description}")
    return 0


def _print_report(spec_id: str, passed: bool, status: dict) -> None:
    print(f"{spec_id}: {'PASS' if passed else 'FAIL'}")
    for name, ok in status.items():
        if not ok:
            print(f"    failed: {name}")


def _cmd_run(args) -> int:
    specs = load_specs(args.config)
    if args.target != "all":
        specs = [s for s in specs if s.id == args.target]
        if not specs:
            print(f"unknown spec id {args.target!r}", file=sys.stderr)
            return 2
    ctx = RunContext(seed=args.seed, tol_scale=args.tol_scale)
    all_ok = True
    for spec in specs:
        report = run(spec, ctx)
        report.write(args.out)
        _print_report(spec.id, report.passed, report.status)
        all_ok &= report.passed
    return 0 if all_ok else 1


def _cmd_report(args) -> int:
    path = Path(args.out) / args.spec_id / "summary.json"
    if not path.exists():
        print(f"no results for {args.spec_id!r} under {args.out} (run it first)", file=sys.stderr)
        return 2
    data = json.loads(path.read_text())
    checks = data.get("summary", {}).get("checks", {})
    print(f"{data['spec_id']}: {'PASS' if data['passed'] else 'FAIL'}")
    for name, ok in data["status"].items():
        entry = checks.get(name, {})
        detail = ", ".join(f"{k}={v}" for k, v in entry.items() if k != "note")
        print(f"  [{'ok' if ok else 'FAIL'}] {name}: {detail}")
    for key, val in data.get("summary", {}).get("info", {}).items():
        print(f"  info {key} = {val}")
    return 0 if data["passed"] else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "list":
            return _cmd_list(args)
        if args.verb == "run":
            return _cmd_run(args)
        return _cmd_report(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
