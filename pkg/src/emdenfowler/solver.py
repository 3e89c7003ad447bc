"""Fixed-point, Newton and truncated-interval solvers for the envelope-truncated problem."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .envelope import Envelope, build_envelope
from .grid import SolutionGrid
from .operator import DiscreteOperator, GreenKernel, TruncatedRHS
from .problem import BoundaryCase, ProblemSpec, reflect
from .quad import GradedMesh, build_mesh, integrate_interval

__all__ = [
    "SolutionGrid",
    "RegularizationSchedule",
    "RegularizedResult",
    "SolverError",
    "assemble",
    "solve_picard",
    "solve_newton",
    "solve_regularized",
    "solve",
    "PICARD_MAX_ITER",
    "NEWTON_MAX_ITER",
]

log = logging.getLogger(__name__)

TOL = 1e-10
PICARD_MAX_ITER = 500
NEWTON_MAX_ITER = 50
THETA = 0.5
N_MAX = 16


class SolverError(RuntimeError):
    pass


def assemble(spec: ProblemSpec, env: Envelope, mesh: Optional[GradedMesh] = None) -> DiscreteOperator:
    mesh = mesh if mesh is not None else build_mesh(30, 0.25, 2)
    return DiscreteOperator(GreenKernel.for_spec(spec), mesh, TruncatedRHS(spec, env))


def _start(op: DiscreteOperator):
    b = op.bound
    return 0.5 * (b.lower + b.upper)


def _sup(x):
    return float(np.max(np.abs(x))) if len(x) else 0.0


def solve_picard(spec, env, op: DiscreteOperator, theta: float = THETA, tol: float = TOL,
                 max_iter: int = PICARD_MAX_ITER, u0=None) -> SolutionGrid:
    """Damped iteration u <- clamp((1 - theta) u + theta A(u)) from the band midpoint."""
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    b = op.bound
    u = _start(op) if u0 is None else b.clamp(np.asarray(u0, dtype=float))
    steps = []
    prev_inc = None
    anti = []
    converged = oscillating = False
    k = 0
    for k in range(1, max_iter + 1):
        new = b.clamp((1 - theta) * u + theta * op.apply(u))
        inc = new - u
        step = _sup(inc)
        steps.append(step)
        if prev_inc is not None:
            anti.append(float(np.dot(inc, prev_inc)) < 0)
        prev_inc = inc
        scale = 1 + _sup(u)
        u = new
        if step <= tol * scale:
            converged = True
            break
        if k >= 20:
            window = steps[-10:]
            # the period-2 amplitude has stopped shrinking
            flat = all(window[i] >= window[i - 2] for i in range(2, len(window)))
            if flat and all(anti[-9:]):
                oscillating = True
                log.info("picard: 2-cycle detected at iteration %d; use a smaller theta", k)
                break
    residual = _sup(op.residual(u))
    return op.to_grid(u, iterations=k, residual=residual, method="picard", converged=converged,
                      oscillating=oscillating, history=tuple(steps))


def solve_newton(spec, env, op: DiscreteOperator, tol: float = TOL, max_iter: int = NEWTON_MAX_ITER,
                 u0=None) -> SolutionGrid:
    """Newton on u - A(u) = 0 with step halving and clamping into the band."""
    b = op.bound
    u = _start(op) if u0 is None else b.clamp(np.asarray(u0, dtype=float))
    n = len(u)
    eye = np.eye(n)
    F = op.residual(u)
    r = _sup(F)
    history = [r]
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        try:
            du = np.linalg.solve(eye - op.jacobian(u), -F)
        except np.linalg.LinAlgError:
            log.warning("newton: singular linearisation, falling back to picard")
            grid = solve_picard(spec, env, op, tol=tol, u0=u)
            return replace(grid, method="newton->picard")
        step = 1.0
        while True:
            new = b.clamp(u + step * du)
            F_new = op.residual(new)
            r_new = _sup(F_new)
            if r_new < r or step < 1e-10:
                break
            step /= 2
        change = _sup(new - u)
        scale = 1 + _sup(u)
        u, F, r = new, F_new, r_new
        history.append(r)
        if change <= tol * scale:
            converged = True
            break
    return op.to_grid(u, iterations=k, residual=r, method="newton", converged=converged,
                      history=tuple(history))


@dataclass(frozen=True)
class RegularizationSchedule:
    """Inner truncation points a_n = 2^-(n+1) and the rule picking r_n in the band."""

    levels: Sequence[int] = tuple(range(1, N_MAX + 1))
    rule: str = "lower"

    def a(self, n: int) -> float:
        return 2.0 ** (-n - 1)

    def pick(self, lower: float, upper: float) -> float:
        if self.rule == "lower":
            return lower
        if self.rule == "upper":
            return upper
        if self.rule == "midpoint":
            return 0.5 * (lower + upper)
        raise ValueError(f"unknown r_n rule {self.rule!r}")


@dataclass(frozen=True, eq=False)
class RegularizedResult:
    levels: List[int]
    a: List[float]
    r: List[float]
    grids: List[SolutionGrid]
    consecutive_distances: List[float]
    reference_distances: List[float] = field(default_factory=list)
    bound_checks: List[tuple] = field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        d = self.consecutive_distances
        return all(d[i + 1] < d[i] for i in range(len(d) - 1))


def _sub_operator(spec, env, a, b, mesh, schedule):
    """Operator for the problem on [a, b] rescaled to [0, 1]."""
    h = b - a
    lo = float(env.lower(a))
    r0 = schedule.pick(lo, float(env.upper(a)))
    if spec.case is BoundaryCase.IV:
        r1 = schedule.pick(float(env.lower(b, 1.0 - b)), float(env.upper(b, 1.0 - b)))
        kernel = GreenKernel(1.0, 0.0, 1.0, 0.0)
        lift = (r0, r1)
    else:
        g, d = spec.gamma, spec.delta / h
        kernel = GreenKernel(1.0, 0.0, g, d)
        lift = (r0, r0 * d / (g + d))
    op = DiscreteOperator(kernel, mesh, TruncatedRHS(spec, env), interval=(a, b), lift=lift)
    return op, r0


def solve_regularized(spec: ProblemSpec, env: Envelope, schedule: Optional[RegularizationSchedule] = None,
                      tol: float = TOL, mesh: Optional[GradedMesh] = None, method: str = "newton",
                      reference: Optional[SolutionGrid] = None) -> RegularizedResult:
    """Solve on [a_n, 1] (Case II) or [a_n, 1 - a_n] (Case IV) with u(a_n) = r_n.

    Case III is handled on the reflected instance. ``reference`` (a solution
    of the full problem with an attached operator) adds the sup-distance of
    each truncated solution to it on the truncated domain, endpoints included.
    """
    case = spec.case
    if case is BoundaryCase.I:
        raise SolverError("truncated problems apply only when an endpoint carries a Dirichlet condition")
    if case is BoundaryCase.III:
        raise SolverError("reflect Case III instances to Case II before calling solve_regularized")
    schedule = schedule or RegularizationSchedule()
    mesh = mesh if mesh is not None else build_mesh(30, 0.25, 2)
    solve_fn = solve_newton if method == "newton" else solve_picard
    levels, avals, rvals, grids, bounds, ref_d = [], [], [], [], [], []
    whole_s = None
    for n in schedule.levels:
        a = schedule.a(n)
        b = 1.0 - a if case is BoundaryCase.IV else 1.0
        op, r0 = _sub_operator(spec, env, a, b, mesh, schedule)
        grid = solve_fn(spec, env, op, tol=tol)
        if not grid.converged:
            raise SolverError(f"truncated problem n={n} did not converge")
        levels.append(n)
        avals.append(a)
        rvals.append(r0)
        grids.append(grid)
        # the integrability bound that keeps each truncated problem regular
        if case is BoundaryCase.II:
            lhs = integrate_interval(spec.g, a, 1.0).value
            if whole_s is None:
                whole_s = integrate_interval(lambda s, sc: s * spec.g(s, sc), 0.0, 1.0).value
            rhs = whole_s / a
        else:
            lhs = integrate_interval(spec.g, a, 1.0 - a).value
            if whole_s is None:
                whole_s = integrate_interval(lambda s, sc: s * sc * spec.g(s, sc), 0.0, 1.0).value
            rhs = whole_s / (a * (1 - a))
        bounds.append((n, float(lhs), float(rhs), bool(lhs <= rhs)))
        if reference is not None:
            # grid nodes span the truncated domain, both ends included
            ref_d.append(_sup(grid.u - reference.evaluate(grid.t, grid.tc)))

    consecutive = []
    for prev, cur in zip(grids, grids[1:]):
        consecutive.append(_sup(prev.u - cur.evaluate(prev.t, prev.tc)))
    return RegularizedResult(levels, avals, rvals, grids, consecutive, ref_d, bounds)


def solve(spec: ProblemSpec, env: Optional[Envelope] = None, method: str = "newton",
          mesh: Optional[GradedMesh] = None, theta: float = THETA, tol: float = TOL,
          max_iter: Optional[int] = None):
    """Envelope -> operator -> iteration. Case III is solved on the reflected instance.

    Returns ``(grid, envelope)``; both refer to the original orientation.
    """
    if method not in ("picard", "newton"):
        raise ValueError(f"unknown method {method!r}")
    if spec.case is BoundaryCase.III:
        grid, _ = solve(reflect(spec), None, method, mesh, theta, tol, max_iter)
        env = env if env is not None else build_envelope(spec, mesh)
        return grid.reflect(), env
    env = env if env is not None else build_envelope(spec, mesh)
    op = assemble(spec, env, mesh)
    if method == "picard":
        grid = solve_picard(spec, env, op, theta, tol, max_iter or PICARD_MAX_ITER)
    else:
        grid = solve_newton(spec, env, op, tol, max_iter or NEWTON_MAX_ITER)
    return grid, env
