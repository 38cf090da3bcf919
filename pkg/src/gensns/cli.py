"""Command-line front end: ``gensns run | solve | verify``."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .io import ScenarioError, bundled_scenario_path, load_instance, load_scenario, write_trace
from .simulation import run
from .sns import SolverError, check_feasibility, sns_velocity
from .verification import verify_run

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve(path: str) -> str:
    # bare names refer to the bundled scenarios
    if path.endswith(".json") and "/" not in path:
        if not os.path.exists(path):
            candidate = bundled_scenario_path(path[:-5])
            if candidate.exists():
                return str(candidate)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gensns", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="full rollout, CSV trace and summary")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="CSV trace path")

    p = sub.add_parser("solve", help="single SNS solve of an instance file")
    p.add_argument("--instance", required=True)

    p = sub.add_parser("verify", help="rollout with per-step checks and oracle cross-checks")
    p.add_argument("--scenario", required=True)
    p.add_argument("--oracle-every", type=int, default=100,
                   help="oracle cross-check period in steps (0 disables; scaled steps always checked)")
    return parser


def _print_summary(summary) -> None:
    for key, value in summary.as_dict().items():
        print(f"{key}: {value}")


def _cmd_run(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    rows, summary = run(scenario)
    write_trace(rows, args.out, scenario.model)
    print(f"scenario: {scenario.name or args.scenario}")
    _print_summary(summary)
    print(f"trace: {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    task, A, bounds = load_instance(args.instance)
    res = sns_velocity(task, A, bounds)
    print(f"qdot: {json.dumps([float(v) for v in res.qdot])}")
    print(f"scale: {res.scale:.17g}")
    print(f"scaled: {str(res.scaled).lower()}")
    print(f"saturated: {' '.join(f'{h + 1}:{side}' for h, side in res.saturated) or '-'}")
    print(f"iterations: {res.iterations}")
    viol = check_feasibility(res.qdot, A, bounds)
    print(f"bound_violations: {len(viol)}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    report = verify_run(scenario, oracle_every=args.oracle_every)
    print(f"scenario: {scenario.name or args.scenario}")
    _print_summary(report.summary)
    print(f"oracle_checks: {report.oracle_checks}")
    if report.scale_gaps:
        gaps = np.array(report.scale_gaps)
        print(f"scale_gap (oracle - applied): min {gaps.min():.3g} max {gaps.max():.3g}")
    if report.norm_gaps:
        gaps = np.array(report.norm_gaps)
        print(f"norm_gap (|qdot_sns| - |qdot_qp|): min {gaps.min():.3g} max {gaps.max():.3g}")
    for line in report.violations[:50]:
        print(f"VIOLATION {line}")
    if len(report.violations) > 50:
        print(f"... {len(report.violations) - 50} more")
    print(f"violations: {len(report.violations)}")
    print("PASS" if report.ok else "FAIL")
    return EXIT_OK if report.ok else EXIT_VERIFY


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "solve": _cmd_solve, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
