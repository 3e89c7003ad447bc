"""Existence of C[0,1] and C^1[0,1] positive solutions via weighted integrals of p + q.

The weight depends on which endpoints carry a Dirichlet condition:

=====  ================  =======================================================
case   C[0,1] weight     C^1[0,1] integrand
=====  ================  =======================================================
I      1                 same as C (the constructed solution is already C^1)
II     t                 t^-lam p + t^-m q
III    1 - t             (1-t)^-lam p + (1-t)^-m q
IV     t (1 - t)         (t(1-t))^-lam p + (t(1-t))^-m q
=====  ================  =======================================================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expr import EndpointOrders, ExpressionError
from .problem import SAMPLE_POINTS, BoundaryCase, ProblemSpec, validate_and_classify
from .quad import ATOL, GradedMesh, IntegralResult, Status, integrate

__all__ = [
    "Verdict",
    "ExistenceCheck",
    "ClassificationReport",
    "check_c_existence",
    "check_c1_existence",
    "classify",
    "c_weight",
    "c1_integrand",
]


class Verdict(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


# endpoint exponents of the C weight: t^a (1-t)^b
_C_WEIGHT = {
    BoundaryCase.I: (0, 0),
    BoundaryCase.II: (1, 0),
    BoundaryCase.III: (0, 1),
    BoundaryCase.IV: (1, 1),
}
_C_WEIGHT_TEXT = {
    BoundaryCase.I: "1",
    BoundaryCase.II: "t",
    BoundaryCase.III: "1-t",
    BoundaryCase.IV: "t*(1-t)",
}
_C1_TEXT = {
    BoundaryCase.I: "(same as C: Case I solution is C^1 by construction)",
    BoundaryCase.II: "t^-lam*p + t^-m*q",
    BoundaryCase.III: "(1-t)^-lam*p + (1-t)^-m*q",
    BoundaryCase.IV: "(t*(1-t))^-lam*p + (t*(1-t))^-m*q",
}


@dataclass(frozen=True)
class ExistenceCheck:
    integral: IntegralResult
    verdict: Verdict
    weight: str


@dataclass(frozen=True)
class ClassificationReport:
    case: BoundaryCase
    c_integral: IntegralResult
    c1_integral: IntegralResult
    c_exists: Verdict
    c1_exists: Verdict
    weight_descriptions: str
    within_hypothesis: bool = True
    notes: tuple = ()

    def as_dict(self):
        return {
            "case": str(self.case),
            "c_integral": _fmt(self.c_integral.value),
            "c_status": str(self.c_integral.status),
            "c_exists": str(self.c_exists),
            "c1_integral": _fmt(self.c1_integral.value),
            "c1_status": str(self.c1_integral.status),
            "c1_exists": str(self.c1_exists),
            "within_hypothesis": str(self.within_hypothesis).lower(),
            "weights": self.weight_descriptions,
        }


def _fmt(x):
    return repr(float(x)) if math.isfinite(x) else str(float(x))


def c_weight(case: BoundaryCase):
    a, b = _C_WEIGHT[case]

    def w(t, tc):
        return t**a * tc**b

    return w


def c1_integrand(spec: ProblemSpec, case: Optional[BoundaryCase] = None):
    """The C^1 criterion integrand ``(t, tc) -> ...`` for Cases II-IV."""
    case = case or spec.case
    a, b = _C_WEIGHT[case]
    lam, m = spec.lam, spec.m

    def h(t, tc):
        base = t**a * tc**b
        return spec.p(t, tc) * base**-lam + spec.q(t, tc) * base**-m

    return h


def _combined_orders(spec, shift_p, shift_q):
    """Declared orders of p*w_p + q*w_q, when both coefficients declare them."""
    po, qo = spec.p_orders, spec.q_orders
    if po is None or qo is None or not (po.declared and qo.declared):
        return None
    s0 = min(po.sigma0 + shift_p[0], qo.sigma0 + shift_q[0])
    s1 = min(po.sigma1 + shift_p[1], qo.sigma1 + shift_q[1])
    return EndpointOrders(s0, s1, declared=True)


def _identically_zero(spec):
    return not np.any(spec.g(SAMPLE_POINTS) > 0)


def _decide(result: IntegralResult, zero: bool) -> Verdict:
    if zero or result.status is Status.DIVERGENT:
        return Verdict.NO
    if result.status is Status.FINITE and result.value > ATOL:
        return Verdict.YES
    return Verdict.INCONCLUSIVE


def _failed(exc):
    nan = math.nan
    return IntegralResult(nan, Status.INCONCLUSIVE, (nan, nan), EndpointOrders(nan, nan))


def _run(f, mesh, orders):
    try:
        return integrate(f, mesh, orders)
    except (ExpressionError, FloatingPointError, ZeroDivisionError) as exc:
        return _failed(exc)


def check_c_existence(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> ExistenceCheck:
    case = spec.case
    w = c_weight(case)
    a, b = _C_WEIGHT[case]
    orders = _combined_orders(spec, (a, b), (a, b))
    result = _run(lambda t, tc: w(t, tc) * spec.g(t, tc), mesh, orders)
    return ExistenceCheck(result, _decide(result, _identically_zero(spec)), _C_WEIGHT_TEXT[case])


def check_c1_existence(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> ExistenceCheck:
    case = spec.case
    if case is BoundaryCase.I:
        c = check_c_existence(spec, mesh)
        return ExistenceCheck(c.integral, c.verdict, _C1_TEXT[case])
    a, b = _C_WEIGHT[case]
    orders = _combined_orders(spec, (-spec.lam * a, -spec.lam * b), (-spec.m * a, -spec.m * b))
    result = _run(c1_integrand(spec, case), mesh, orders)
    return ExistenceCheck(result, _decide(result, _identically_zero(spec)), _C1_TEXT[case])


def classify(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> ClassificationReport:
    case = validate_and_classify(spec)
    c = check_c_existence(spec, mesh)
    c1 = check_c1_existence(spec, mesh)
    c1_verdict = c1.verdict
    notes = []
    if c1_verdict is Verdict.YES and c.verdict is not Verdict.YES:
        # a C^1 solution is a C solution; a disagreement means numerics, not math
        c1_verdict = Verdict.INCONCLUSIVE
        notes.append("C^1 criterion finite while C criterion is not; C^1 verdict withheld")
    if case is BoundaryCase.I:
        notes.append("Case I: C^1 verdict equals C verdict (solution is C^1 by construction)")
    within = spec.within_hypothesis()
    if not within:
        notes.append("outside the standing hypothesis: p or q vanishes identically")
    text = f"C: {_C_WEIGHT_TEXT[case]} * (p+q); C1: {_C1_TEXT[case]}"
    return ClassificationReport(case, c.integral, c1.integral, c.verdict, c1_verdict, text, within, tuple(notes))
