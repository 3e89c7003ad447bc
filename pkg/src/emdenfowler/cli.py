"""Command-line driver: check, envelope, solve, verify, demo.

Exit status: 0 pass/Yes, 2 No/fail, 3 Inconclusive/non-convergence,
1 usage or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .conditions import Verdict, classify
from .envelope import EnvelopeError, build_envelope
from .expr import ExpressionError
from .files import (
    DEMOS,
    ProblemFileError,
    SolverConfig,
    load_problem,
    read_solution_csv,
    write_envelope_csv,
    write_solution_csv,
)
from .problem import BoundaryCase, ProblemError, reflect
from .quad import build_mesh
from .solver import RegularizationSchedule, SolverError, solve, solve_regularized
from .verify import VerificationError, verify_solution

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3
CELLS_PER_LEVEL = 2
ENVELOPE_POINTS = 501

log = logging.getLogger("emdenfowler")


def _emit(block: Dict, out=None, prefix=""):
    out = out or sys.stdout
    for k, v in block.items():
        out.write(f"{prefix}{k}={v}\n")


def _verdict_code(v: Verdict):
    return {Verdict.YES: EXIT_OK, Verdict.NO: EXIT_FAIL}.get(v, EXIT_INCONCLUSIVE)


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _config(args, config: SolverConfig) -> SolverConfig:
    for key in ("mesh_levels", "method", "theta", "tol"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(config, key, v)
    return config.validate()


def _mesh(config):
    return build_mesh(config.mesh_levels, config.h0, CELLS_PER_LEVEL)


def _growth_envelope(spec, report, mesh):
    """Linear-growth envelope when a C^1 solution is certified and u(0) = 0."""
    if spec.beta != 0 or spec.case is BoundaryCase.I or report.c1_exists is not Verdict.YES:
        return None
    try:
        return build_envelope(spec, mesh, kind="C1")
    except (EnvelopeError, ValueError, ArithmeticError) as exc:
        log.info("no growth envelope: %s", exc)
        return None


def cmd_check(args, spec, config):
    report = classify(spec)
    _emit(report.as_dict())
    for note in report.notes:
        _emit({"note": note})
    return _verdict_code(report.c_exists)


def cmd_envelope(args, spec, config):
    mesh = _mesh(config)
    env = build_envelope(spec, mesh, kind=args.kind)
    t = np.linspace(0.0, 1.0, ENVELOPE_POINTS)
    tc = 1.0 - t
    with _output(args.output) as fh:
        write_envelope_csv(fh, t, env.lower(t, tc), env.upper(t, tc))
    info = sys.stderr if args.output in (None, "-") else sys.stdout
    _emit({"case": str(env.case), "kind": env.kind, "k1": repr(env.k1), "k2": repr(env.k2)}, info)
    _emit({k: repr(float(v)) for k, v in env.constants.items()}, info)
    if env.n is not None:
        _emit({"n": env.n}, info)
    return EXIT_OK


def _pipeline(spec, config):
    timings = {}
    t0 = time.perf_counter()
    report = classify(spec)
    timings["classify_s"] = time.perf_counter() - t0
    if report.c_exists is Verdict.NO:
        return report, None, None, None, timings
    mesh = _mesh(config)
    t0 = time.perf_counter()
    env = build_envelope(spec, mesh)
    timings["envelope_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    grid, env = solve(spec, env, config.method, mesh, config.theta, config.tol, config.max_iter)
    timings["solve_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    vrep = verify_solution(spec, env, grid, _growth_envelope(spec, report, mesh))
    timings["verify_s"] = time.perf_counter() - t0
    return report, env, grid, vrep, timings


def _regularize(spec, config, env):
    case = spec.case
    if case is BoundaryCase.I:
        return {"regularize": "skipped (no Dirichlet endpoint)"}
    mesh = _mesh(config)
    if case is BoundaryCase.III:
        spec = reflect(spec)
        env = build_envelope(spec, mesh)
    res = solve_regularized(spec, env, RegularizationSchedule(tuple(range(4, 13))), config.tol, mesh,
                            config.method)
    out = {"regularize_levels": ",".join(map(str, res.levels)),
           "regularize_distances": ",".join(repr(d) for d in res.consecutive_distances),
           "regularize_decreasing": str(res.decreasing).lower(),
           "regularize_bound_holds": str(all(b[3] for b in res.bound_checks)).lower()}
    if case is BoundaryCase.III:
        out["regularize_reflected"] = "true"
    return out


def cmd_solve(args, spec, config):
    report, env, grid, vrep, timings = _pipeline(spec, config)
    run = {"problem": args.problem, "case": str(report.case), "c_exists": str(report.c_exists),
           "c1_exists": str(report.c1_exists)}
    run.update({f"solver.{k}": v for k, v in config.as_dict().items()})
    run["solver.cells_per_level"] = CELLS_PER_LEVEL
    if grid is None:
        run["status"] = "no solution (C criterion fails)"
        _emit(run)
        return EXIT_FAIL
    with _output(args.output) as fh:
        write_solution_csv(fh, grid)
    info = sys.stderr if args.output in (None, "-") else sys.stdout
    run.update({
        "solution": args.output or "-",
        "reflected": str(spec.case is BoundaryCase.III).lower(),
        "k1": repr(env.k1), "k2": repr(env.k2),
        "converged": str(grid.converged).lower(),
        "oscillating": str(grid.oscillating).lower(),
        "iterations": grid.iterations,
        "fixed_point_residual": repr(grid.residual),
        "nodes": len(grid),
    })
    run.update({k: repr(float(v)) for k, v in env.constants.items()})
    if config.regularize:
        run.update(_regularize(spec, config, env))
    run.update(vrep.as_dict())
    run.update({k: f"{v:.3f}" for k, v in timings.items()})
    _emit(run, info)
    if not grid.converged:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if vrep.passed else EXIT_FAIL


def cmd_verify(args, spec, config):
    try:
        grid = read_solution_csv(args.solution)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = classify(spec)
    mesh = _mesh(config)
    env = build_envelope(spec, mesh)
    vrep = verify_solution(spec, env, grid, _growth_envelope(spec, report, mesh))
    _emit(vrep.as_dict())
    return EXIT_OK if vrep.passed else EXIT_FAIL


def cmd_demo(args):
    names = {d.name for d in DEMOS}
    chosen = [d for d in DEMOS if args.name in (None, d.name)]
    if not chosen:
        print(f"error: unknown demo {args.name!r}; choose from {sorted(names)}", file=sys.stderr)
        return EXIT_USAGE
    outdir = Path(args.output) if args.output else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    config = _config(args, SolverConfig())
    status = EXIT_OK
    for demo in chosen:
        spec = demo.spec()
        report, env, grid, vrep, timings = _pipeline(spec, config)
        block = {"case": str(spec.case), "description": demo.description}
        if grid is None:
            block["status"] = "no solution"
            status = max(status, EXIT_FAIL)
        else:
            block.update({"converged": str(grid.converged).lower(), "iterations": grid.iterations,
                          "fixed_point_residual": repr(grid.residual)})
            if demo.exact:
                exact = demo.exact_solution()(grid.t, grid.tc)
                block["max_error"] = repr(float(np.max(np.abs(grid.u - exact))))
            block["verdict"] = "pass" if vrep.passed else "fail"
            if vrep.failures():
                block["failed_checks"] = ",".join(vrep.failures())
            block["seconds"] = f"{sum(timings.values()):.3f}"
            if outdir:
                with open(outdir / f"{demo.name}.csv", "w", newline="") as fh:
                    write_solution_csv(fh, grid)
            if not grid.converged:
                status = max(status, EXIT_INCONCLUSIVE)
            elif not vrep.passed:
                status = max(status, EXIT_FAIL) if status != EXIT_INCONCLUSIVE else status
        _emit(block, prefix=f"{demo.name}.")
    return status


def _solver_flags(p):
    p.add_argument("--mesh-levels", type=int, dest="mesh_levels", help="graded mesh levels J")
    p.add_argument("--method", choices=("picard", "newton"))
    p.add_argument("--theta", type=float, help="Picard damping in (0, 1]")
    p.add_argument("--tol", type=float, help="convergence tolerance")


def build_parser():
    parser = argparse.ArgumentParser(prog="emdenfowler", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="classify a problem and test the existence criteria")
    p.add_argument("problem")
    _solver_flags(p)

    p = sub.add_parser("envelope", help="lower/upper solutions on 501 points as CSV")
    p.add_argument("problem")
    p.add_argument("-o", "--output")
    p.add_argument("--kind", choices=("C", "C1"), default="C",
                   help="C: envelope for C[0,1] solutions; C1: linear-growth envelope (Cases II-IV)")
    _solver_flags(p)

    p = sub.add_parser("solve", help="solve and write t,u,du CSV plus a run report")
    p.add_argument("problem")
    p.add_argument("-o", "--output")
    _solver_flags(p)

    p = sub.add_parser("verify", help="verify a t,u,du CSV against a problem")
    p.add_argument("problem")
    p.add_argument("solution")
    _solver_flags(p)

    p = sub.add_parser("demo", help="run the built-in manufactured instances")
    p.add_argument("--name", help="run a single demo: " + ", ".join(d.name for d in DEMOS))
    p.add_argument("-o", "--output", help="directory for solution CSVs")
    _solver_flags(p)
    return parser


COMMANDS = {"check": cmd_check, "envelope": cmd_envelope, "solve": cmd_solve, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "demo":
            return cmd_demo(args)
        spec, config = load_problem(args.problem)
        config = _config(args, config)
        return COMMANDS[args.command](args, spec, config)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (ProblemFileError, ProblemError, ExpressionError, VerificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, EnvelopeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
