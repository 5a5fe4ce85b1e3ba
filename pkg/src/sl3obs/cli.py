"""Command-line interface.

Subcommands::

    sl3obs simulate --scenario sc.json --out run.csv [--json run.json] [--seed N]
    sl3obs check-consistency --in directions.json
    sl3obs property-suite [--quick]
    sl3obs bench [--integrator exp-euler|rk4-renorm] [--steps N]

Exit codes: 0 success, 1 validation failure, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .consistency import check_consistent
from .errors import ConfigError, Sl3obsError
from .observer import (
    AlgebraElement,
    FeatureFrame,
    Gains,
    ObserverState,
    rk4_renorm_step,
    step_full,
)
from .props import PROPERTIES, run_property_suite
from .scene import default_feature_square
from .sim import emit_csv, emit_json, load_scenario, run_scenario
from .sl3 import GroupElement, ProjectivePoint, measurement_map


def _cmd_simulate(args) -> int:
    scenario_doc = None
    try:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            scenario_doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: scenario is not valid JSON: {exc}", file=sys.stderr)
        return 1

    if args.seed is not None:
        scenario_doc["seed"] = args.seed
    sc = load_scenario(scenario_doc)
    run = run_scenario(sc)
    try:
        emit_csv(run, args.out)
        if args.json:
            emit_json(run, args.json)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2
    status = "aborted: " + run.abort_reason if run.aborted else "ok"
    print(f"{len(run.rows)} rows -> {args.out} ({status})")
    return 0


def _cmd_check_consistency(args) -> int:
    try:
        with open(args.infile, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: input is not valid JSON: {exc}", file=sys.stderr)
        return 1

    if isinstance(doc, dict) and "ref_features" in doc:
        doc = doc["ref_features"]
    if isinstance(doc, dict):
        raise ConfigError("expected a JSON array of directions "
                          "(or a scenario with ref_features)")
    dirs = [ProjectivePoint(np.asarray(v, dtype=float)) for v in doc]
    report = check_consistent(dirs)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_property_suite(args) -> int:
    failures = run_property_suite(quick=args.quick)
    n = len(PROPERTIES)
    print(f"{'PASS' if failures == 0 else 'FAIL'}: {n - failures}/{n} properties hold")
    return 0 if failures == 0 else 1


def _cmd_bench(args) -> int:
    refs = tuple(default_feature_square())
    h_true = GroupElement.identity()
    p = tuple(measurement_map(h_true, r) for r in refs)
    u = AlgebraElement(np.array([[0.1, 0.3, 0.0], [-0.2, 0.0, 0.1], [0.0, 0.2, -0.1]]))
    frame = FeatureFrame(observed=tuple(enumerate(p)), reference=refs, u_full=u)
    gains = Gains(kp=60.0, ki=1.0)
    stepper = step_full if args.integrator == "exp-euler" else rk4_renorm_step
    state = ObserverState(GroupElement(np.eye(3) + 0.1))
    t0 = time.perf_counter()
    for _ in range(args.steps):
        state = stepper(state, frame, gains, 1e-3)
    elapsed = time.perf_counter() - t0
    drift = abs(float(np.linalg.det(state.h_hat.m)) - 1.0)
    print(f"{args.integrator}: {args.steps / elapsed:,.0f} steps/s "
          f"({elapsed / args.steps * 1e6:.1f} us/step, |det-1| = {drift:.2e})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sl3obs",
        description="Homography observer on SL(3): simulator and diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write the log")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json", default=None, help="optional JSON log path")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("check-consistency",
                       help="report consistency of a direction set")
    p.add_argument("--in", dest="infile", required=True,
                   help="JSON array of 3-vectors (or scenario file)")
    p.set_defaults(fn=_cmd_check_consistency)

    p = sub.add_parser("property-suite", help="run all module invariants")
    p.add_argument("--quick", action="store_true", help="reduced repetition counts")
    p.set_defaults(fn=_cmd_property_suite)

    p = sub.add_parser("bench", help="integrator throughput")
    p.add_argument("--integrator", choices=("exp-euler", "rk4-renorm"),
                   default="exp-euler")
    p.add_argument("--steps", type=int, default=20000)
    p.set_defaults(fn=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Sl3obsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
