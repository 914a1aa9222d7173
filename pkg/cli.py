"""
Command-line front end.

    python cli.py validate fixtures/torus2.json
    python cli.py flow --method newton --target uniform fixtures/torus2.json --output out.json
    python cli.py selftest --samples 1000 --seed 7

Exit codes: 0 ok, 1 validation failure, 2 non-convergence, 3 I/O.
Errors are written to stderr as one JSON object.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

import config
from errors import PackFlowError, ProblemIOError
from schemas import dumps, read_problem, write_flip_log, write_json, write_trace_csv
from solver import PackFlowSolver

logger = logging.getLogger("packflow.cli")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default from LOG_LEVEL)")
    common.add_argument("--record", action="store_true", help="store the run in the database")
    common.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="packflow",
                                     description="Inversive distance circle packings: Delaunay surgery and Ricci flow.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a problem file, print chi, |E|, |F| and edge slacks")
    p.add_argument("problem")

    p = sub.add_parser("curvature", parents=[common], help="print curvatures and the Gauss-Bonnet residual")
    p.add_argument("problem")

    p = sub.add_parser("delaunayize", parents=[common], help="flip to the weighted Delaunay triangulation")
    p.add_argument("problem")
    p.add_argument("--tol", type=float, default=None, help="relative flip tolerance")
    p.add_argument("--flip-budget", type=int, default=None)
    p.add_argument("--flip-log", default=None, help="also write the flip log as JSON")

    p = sub.add_parser("flow", parents=[common], help="run the Ricci flow to a target curvature")
    p.add_argument("problem")
    p.add_argument("--method", choices=["euler", "newton"], default=None)
    p.add_argument("--tol", type=float, default=None, help="curvature tolerance")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--flip-budget", type=int, default=None)
    p.add_argument("--target", default=None,
                   help="'uniform' or comma-separated per-vertex curvatures (default: file target, else uniform)")
    p.add_argument("--trace", default=None, help="write the flow trace as CSV")

    p = sub.add_parser("canonical", parents=[common], help="canonical representative of the conformal class")
    p.add_argument("problem")

    p = sub.add_parser("equiv", parents=[common], help="are two packings discretely conformal")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("selftest", parents=[common], help="randomized identity suites")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)

    return parser.parse_args(argv)


def _parse_target(raw: Optional[str]):
    if raw is None or raw == "uniform":
        return raw
    try:
        return [float(x) for x in raw.split(",")]
    except ValueError:
        raise ProblemIOError(f"--target must be 'uniform' or a comma-separated list, got {raw!r}")


def _emit(report, output: Optional[str]):
    if output:
        write_json(report, output)
        logger.info("wrote %s", output)
    else:
        print(dumps(report))


def run(args: argparse.Namespace) -> int:
    svc = PackFlowSolver(record=args.record or config.RECORD_RUNS)
    cmd = args.command

    if cmd == "selftest":
        report = svc.selftest(samples=args.samples, seed=args.seed)
        _emit(report, args.output)
        for suite in report.suites:
            logger.info("%-28s max %.3e  (< %.0e)  %s", suite.name, suite.max_residual, suite.threshold,
                        "ok" if suite.passed else "FAIL")
        return 0 if report.passed else 1

    if cmd == "equiv":
        report = svc.equiv(read_problem(args.first), read_problem(args.second), tol=args.tol)
        _emit(report, args.output)
        return 0

    pf = read_problem(args.problem)
    if cmd == "validate":
        report = svc.validate(pf)
        logger.info("chi=%d |E|=%d |F|=%d delaunay=%s", report.euler_characteristic, report.num_edges,
                    report.num_faces, report.delaunay)
    elif cmd == "curvature":
        report = svc.curvature(pf)
        logger.info("Gauss-Bonnet residual %.3e", report.gauss_bonnet_residual)
    elif cmd == "delaunayize":
        report = svc.delaunayize(pf, tol=args.tol, flip_budget=args.flip_budget)
        if args.flip_log:
            write_flip_log(report.flips, args.flip_log)
        _emit(report.problem, args.output)
        return 0
    elif cmd == "flow":
        report, trace = svc.flow(pf, method=args.method, tol=args.tol, max_iters=args.max_iters,
                                 flip_budget=args.flip_budget, target=_parse_target(args.target))
        if args.trace:
            write_trace_csv(trace, args.trace)
        logger.info("%s: %d iterations, %d flips, max|K-K*| = %.3e", report.method, report.iterations,
                    report.total_flips, report.max_err)
    elif cmd == "canonical":
        report = svc.canonical(pf)
    else:
        raise ProblemIOError(f"unknown command {cmd!r}")

    _emit(report, args.output)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    config.setup_logging(args.log_level)
    try:
        return run(args)
    except PackFlowError as e:
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
