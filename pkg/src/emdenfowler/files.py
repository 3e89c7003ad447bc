"""Problem files (TOML), solution/envelope CSV files and the built-in demo instances."""
from __future__ import annotations

import csv
import io
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, Optional, TextIO

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expr import EndpointOrders, ExpressionError, estimate_endpoint_order, parse
from .grid import SolutionGrid
from .problem import ProblemSpec

__all__ = [
    "ProblemFileError",
    "SolverConfig",
    "load_problem",
    "parse_problem",
    "problem_to_toml",
    "write_solution_csv",
    "write_envelope_csv",
    "read_solution_csv",
    "DEMOS",
    "Demo",
]


class ProblemFileError(ValueError):
    pass


@dataclass
class SolverConfig:
    """Solver settings; every field has a documented default."""

    mesh_levels: int = 30
    h0: float = 0.25
    method: str = "newton"
    theta: float = 0.5
    tol: float = 1e-10
    max_iter: Optional[int] = None
    regularize: bool = False

    def validate(self):
        if self.method not in ("newton", "picard"):
            raise ProblemFileError(f"solver.method must be 'newton' or 'picard', got {self.method!r}")
        if not 0 < self.theta <= 1:
            raise ProblemFileError("solver.theta must lie in (0, 1]")
        if self.tol <= 0:
            raise ProblemFileError("solver.tol must be positive")
        if self.mesh_levels < 4:
            raise ProblemFileError("solver.mesh_levels must be at least 4")
        if not 0 < self.h0 <= 0.25:
            raise ProblemFileError("solver.h0 must lie in (0, 0.25]")
        if self.max_iter is not None and self.max_iter < 1:
            raise ProblemFileError("solver.max_iter must be positive")
        return self

    def as_dict(self):
        return {k: ("default" if v is None else v) for k, v in asdict(self).items()}


_EQUATION = {"lambda", "m", "p", "q", "p_order_0", "p_order_1", "q_order_0", "q_order_1"}
_BOUNDARY = {"alpha", "beta", "gamma", "delta"}
_SOLVER = {f.name for f in fields(SolverConfig)}
_SECTIONS = {"equation": _EQUATION, "boundary": _BOUNDARY, "solver": _SOLVER}
_REQUIRED = {"equation": {"lambda", "m", "p", "q"}, "boundary": _BOUNDARY}


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _orders(expr, eq, name):
    k0, k1 = f"{name}_order_0", f"{name}_order_1"
    if k0 not in eq and k1 not in eq:
        return None
    s0 = _number("equation", k0, eq[k0]) if k0 in eq else estimate_endpoint_order(expr, 0)[0]
    s1 = _number("equation", k1, eq[k1]) if k1 in eq else estimate_endpoint_order(expr, 1)[0]
    return EndpointOrders(s0, s1, declared=True)


def parse_problem(text: str, name: str = "problem"):
    """Parse problem-file text into ``(ProblemSpec, SolverConfig)``."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFileError(f"{name}: {exc}") from None
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ProblemFileError(f"{name}: unknown section(s) {sorted(unknown)}")
    for section, allowed in _SECTIONS.items():
        body = data.get(section, {})
        if not isinstance(body, dict):
            raise ProblemFileError(f"{name}: [{section}] must be a table")
        extra = set(body) - allowed
        if extra:
            raise ProblemFileError(f"{name}: unknown key(s) in [{section}]: {sorted(extra)}")
        missing = _REQUIRED.get(section, set()) - set(body)
        if missing:
            raise ProblemFileError(f"{name}: missing key(s) in [{section}]: {sorted(missing)}")
    eq, bc = data["equation"], data["boundary"]
    exprs = {}
    for key in ("p", "q"):
        raw = eq[key]
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            raw = repr(float(raw))
        if not isinstance(raw, str):
            raise ProblemFileError(f"{name}: equation.{key} must be an expression string")
        try:
            exprs[key] = parse(raw)
        except ExpressionError as exc:
            raise ProblemFileError(f"{name}: equation.{key}: {exc}") from None
    spec = ProblemSpec(
        lam=_number("equation", "lambda", eq["lambda"]),
        m=_number("equation", "m", eq["m"]),
        alpha=_number("boundary", "alpha", bc["alpha"]),
        beta=_number("boundary", "beta", bc["beta"]),
        gamma=_number("boundary", "gamma", bc["gamma"]),
        delta=_number("boundary", "delta", bc["delta"]),
        p=exprs["p"], q=exprs["q"],
        p_orders=_orders(exprs["p"], eq, "p"),
        q_orders=_orders(exprs["q"], eq, "q"),
        name=name,
    )
    solver = dict(data.get("solver", {}))
    try:
        config = SolverConfig(**solver)
    except TypeError as exc:
        raise ProblemFileError(f"{name}: {exc}") from None
    return spec, config.validate()


def load_problem(path):
    path = Path(path)
    return parse_problem(path.read_text(), name=path.stem)


def problem_to_toml(spec: ProblemSpec, config: Optional[SolverConfig] = None) -> str:
    lines = [
        "[equation]",
        f"lambda = {spec.lam!r}",
        f"m = {spec.m!r}",
        f'p = "{spec.p.source}"',
        f'q = "{spec.q.source}"',
        "",
        "[boundary]",
        f"alpha = {spec.alpha!r}",
        f"beta = {spec.beta!r}",
        f"gamma = {spec.gamma!r}",
        f"delta = {spec.delta!r}",
    ]
    if config is not None:
        lines += ["", "[solver]"]
        for k, v in asdict(config).items():
            if v is None:
                continue
            lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    return repr(v)


def _fmt(x):
    return f"{float(x):.17g}"


def _write_rows(out: TextIO, header, columns):
    out.write(",".join(header) + "\n")
    for row in zip(*columns):
        out.write(",".join(_fmt(v) for v in row) + "\n")


def write_solution_csv(out: TextIO, grid: SolutionGrid):
    _write_rows(out, ("t", "u", "du"), (grid.t, grid.u, grid.du))


def write_envelope_csv(out: TextIO, t, lower, upper):
    _write_rows(out, ("t", "lower", "upper"), (t, lower, upper))


def read_solution_csv(source) -> SolutionGrid:
    """A SolutionGrid from a ``t,u,du`` CSV (path or text stream)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ProblemFileError("empty solution file") from None
    if [h.strip() for h in header] != ["t", "u", "du"]:
        raise ProblemFileError(f"solution header must be 't,u,du', got {','.join(header)!r}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ProblemFileError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise ProblemFileError(f"line {lineno}: non-numeric field") from None
    if not rows:
        raise ProblemFileError("solution file has no data rows")
    a = np.array(rows)
    order = np.argsort(a[:, 0], kind="stable")
    a = a[order]
    return SolutionGrid(a[:, 0], 1.0 - a[:, 0], a[:, 1], a[:, 2], method="csv", converged=True)


@dataclass(frozen=True)
class Demo:
    name: str
    description: str
    problem: Dict
    exact: Optional[str] = None

    def spec(self) -> ProblemSpec:
        return ProblemSpec.from_strings(**self.problem, name=self.name)

    def exact_solution(self):
        return None if self.exact is None else parse(self.exact)


DEMOS = (
    Demo("dirichlet", "Case IV, u = t(1-t)",
         dict(p="(t*(1-t))^2", q="(t*(1-t))^2", lam=2, m=2, alpha=1, beta=0, gamma=1, delta=0),
         "t*(1-t)"),
    Demo("mixed_left", "Case II, u = t(1.5-t)",
         dict(p="(t*(1.5-t))^2", q="(t*(1.5-t))^2", lam=2, m=2, alpha=1, beta=0, gamma=1, delta=1),
         "t*(1.5-t)"),
    Demo("mixed_right", "Case III, u = (1-t)(0.5+t)",
         dict(p="((1-t)*(0.5+t))^2", q="((1-t)*(0.5+t))^2", lam=2, m=2, alpha=1, beta=1, gamma=1, delta=0),
         "(1-t)*(0.5+t)"),
    Demo("robin", "Case I, u = 1 + t - t^2",
         dict(p="1+t-t^2", q="1+t-t^2", lam=1, m=1, alpha=1, beta=1, gamma=1, delta=1),
         "1+t-t^2"),
    Demo("singular", "Case IV, p = t^-0.5 singular at 0, no closed form",
         dict(p="t^(-0.5)", q="1", lam=0.5, m=2, alpha=1, beta=0, gamma=1, delta=0)),
)
