"""Problem instances u'' + p u^-lam + q u^-m = 0 with separated Robin conditions."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .expr import EndpointOrders, Expression, parse

__all__ = [
    "BoundaryCase",
    "ProblemSpec",
    "ProblemError",
    "OutsideHypothesisWarning",
    "validate_and_classify",
    "reflect",
    "SAMPLE_POINTS",
]

# interior sample used as a numeric surrogate for p >= 0, q >= 0
SAMPLE_POINTS = (np.arange(1000) + 0.5) / 1000


class ProblemError(ValueError):
    pass


class OutsideHypothesisWarning(UserWarning):
    pass


class BoundaryCase(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ProblemSpec:
    lam: float
    m: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    p: Expression
    q: Expression
    p_orders: Optional[EndpointOrders] = None
    q_orders: Optional[EndpointOrders] = None
    name: str = field(default="", compare=False)

    @classmethod
    def from_strings(cls, p, q, lam, m, alpha, beta, gamma, delta, **kwargs):
        return cls(
            lam=float(lam), m=float(m),
            alpha=float(alpha), beta=float(beta), gamma=float(gamma), delta=float(delta),
            p=parse(p) if isinstance(p, str) else p,
            q=parse(q) if isinstance(q, str) else q,
            **kwargs,
        )

    @property
    def rho(self) -> float:
        return self.gamma * self.beta + self.alpha * self.gamma + self.alpha * self.delta

    @property
    def case(self) -> BoundaryCase:
        if self.beta > 0 and self.delta > 0:
            return BoundaryCase.I
        if self.delta > 0:
            return BoundaryCase.II
        if self.beta > 0:
            return BoundaryCase.III
        return BoundaryCase.IV

    @property
    def mu(self) -> float:
        """min(lam, m), the exponent governing the envelope constructions."""
        return min(self.lam, self.m)

    def g(self, t, tc=None):
        """p(t) + q(t)."""
        return self.p(t, tc) + self.q(t, tc)

    def within_hypothesis(self) -> bool:
        p = self.p(SAMPLE_POINTS)
        q = self.q(SAMPLE_POINTS)
        return bool(np.any(p > 0) and np.any(q > 0))


def validate_and_classify(spec: ProblemSpec) -> BoundaryCase:
    """Check lam, m > 0, rho > 0 and sampled nonnegativity; return the case tag."""
    if not spec.lam > 0 or not spec.m > 0:
        raise ProblemError(f"exponents must be positive, got lam={spec.lam}, m={spec.m}")
    for name in ("alpha", "beta", "gamma", "delta"):
        if getattr(spec, name) < 0:
            raise ProblemError(f"boundary coefficient {name} must be nonnegative")
    if not spec.rho > 0:
        raise ProblemError(f"rho = gamma*beta + alpha*gamma + alpha*delta must be positive, got {spec.rho}")
    for label, e in (("p", spec.p), ("q", spec.q)):
        values = e(SAMPLE_POINTS)
        bad = np.flatnonzero(values < 0)
        if bad.size:
            t = SAMPLE_POINTS[bad[0]]
            raise ProblemError(f"{label}(t) is negative at t={t:.4f} ({values[bad[0]]:.6g})")
    p_zero = not np.any(spec.p(SAMPLE_POINTS) > 0)
    q_zero = not np.any(spec.q(SAMPLE_POINTS) > 0)
    if p_zero and q_zero:
        pass  # reported as c_exists = No by the checker
    elif p_zero or q_zero:
        warnings.warn(
            "one coefficient vanishes identically; the instance is outside the standing hypothesis (both p and q nontrivial)",
            OutsideHypothesisWarning,
            stacklevel=2,
        )
    return spec.case


def _swap(orders: Optional[EndpointOrders]):
    if orders is None:
        return None
    return EndpointOrders(orders.sigma1, orders.sigma0, orders.declared, orders.residual1, orders.residual0)


def reflect(spec: ProblemSpec) -> ProblemSpec:
    """The same instance under t -> 1 - t (maps Case III to Case II)."""
    return replace(
        spec,
        alpha=spec.gamma, beta=spec.delta, gamma=spec.alpha, delta=spec.beta,
        p=spec.p.reflected(), q=spec.q.reflected(),
        p_orders=_swap(spec.p_orders), q_orders=_swap(spec.q_orders),
    )
