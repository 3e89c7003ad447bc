"""Independent a-posteriori checks of a computed solution grid.

Nothing here touches the solver's operator: values between nodes come from
local polynomial interpolation of the grid itself, derivatives from finite
differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .envelope import Envelope
from .grid import SolutionGrid
from .problem import ProblemSpec

__all__ = [
    "VerificationError",
    "VerificationReport",
    "residual_norm",
    "boundary_errors",
    "containment_violation",
    "concavity_violation",
    "growth_ratios",
    "verify_solution",
    "TOLERANCES",
]

TOLERANCES = {
    "residual": 1e-4,
    "bc": 1e-6,
    "containment": 1e-8,
    "concavity": 1e-6,
    "growth": 1e-6,
}

PROBES = np.linspace(0.02, 0.98, 97)
STENCIL_H = 1e-3
LOCAL_POINTS = 8
BC_H = 1e-3


class VerificationError(ValueError):
    pass


def _local(grid: SolutionGrid, t0: float, k: int = LOCAL_POINTS) -> BarycentricInterpolator:
    """Interpolant through the k grid nodes nearest t0."""
    d = np.abs(grid.t - t0)
    idx = np.sort(np.argpartition(d, k - 1)[:k]) if len(d) > k else np.arange(len(d))
    return BarycentricInterpolator(grid.t[idx], grid.u[idx])


def _d2(grid, t0, h):
    poly = _local(grid, t0)
    v = poly(t0 + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0]))
    return (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h), v[2]


def residual_norm(spec: ProblemSpec, grid: SolutionGrid, probes=PROBES, h: float = STENCIL_H) -> float:
    """sup_j t_j(1 - t_j) |u''(t_j) + p u^-lam + q u^-m| over interior probes."""
    inside = np.count_nonzero((grid.t > probes[0]) & (grid.t < probes[-1]))
    if inside < 5:
        raise VerificationError(f"need at least 5 nodes in ({probes[0]}, {probes[-1]}), got {inside}")
    worst = 0.0
    for tj in probes:
        d2, u = _d2(grid, tj, h)
        tj_a = np.array([tj])
        tc_a = 1.0 - tj_a
        with np.errstate(all="ignore"):
            f = spec.p(tj_a, tc_a)[0] * u ** -spec.lam + spec.q(tj_a, tc_a)[0] * u ** -spec.m
        r = abs(d2 + f) * tj * (1 - tj)
        if not math.isfinite(r):
            return math.inf
        worst = max(worst, r)
    return float(worst)


def _one_sided(grid: SolutionGrid, end: int, h: float = BC_H):
    """Endpoint value and one-sided 3-point derivative (quadratic through the end node)."""
    dist = grid.t if end == 0 else grid.tc
    order = np.argsort(dist, kind="stable")
    picks = [int(order[0])]
    # next nodes at distance >= h and >= twice the previous pick (or simply the next ones)
    for floor in (h, None):
        floor = 2 * dist[picks[-1]] if floor is None else floor
        later = [int(i) for i in order if dist[i] >= floor and int(i) not in picks]
        if not later:
            later = [int(i) for i in order if int(i) not in picks]
        if later:
            picks.append(later[0])
    x = dist[picks]
    if len(set(x.tolist())) < 3:
        raise VerificationError("too few nodes near the endpoint for a one-sided stencil")
    c = np.polyfit(x - x[0], grid.u[picks], 2)
    # derivative along the distance coordinate, then back to d/dt
    value = np.polyval(c, -x[0])
    slope = np.polyval(np.polyder(c), -x[0])
    return float(value), float(slope if end == 0 else -slope)


def boundary_errors(spec: ProblemSpec, grid: SolutionGrid) -> Tuple[float, float]:
    u0, du0 = _one_sided(grid, 0)
    u1, du1 = _one_sided(grid, 1)
    e0 = abs(spec.alpha * u0 - spec.beta * du0) if spec.beta else abs(spec.alpha * u0)
    e1 = abs(spec.gamma * u1 + spec.delta * du1) if spec.delta else abs(spec.gamma * u1)
    return float(e0), float(e1)


def containment_violation(env: Envelope, grid: SolutionGrid) -> float:
    lo = env.lower(grid.t, grid.tc)
    hi = env.upper(grid.t, grid.tc)
    v = np.maximum(np.maximum(lo - grid.u, grid.u - hi), 0.0)
    return float(np.max(v))


def concavity_violation(grid: SolutionGrid, n: int = 91) -> float:
    """max(0, max D^2 u) over a uniform sub-sample of (0.05, 0.95)."""
    s = np.linspace(0.05, 0.95, n)
    h = s[1] - s[0]
    u = np.array([_local(grid, x)(x) for x in s])
    d2 = (u[:-2] - 2 * u[1:-1] + u[2:]) / (h * h)
    return float(max(0.0, np.max(d2)))


def growth_ratios(grid: SolutionGrid, env: Envelope, t_max: float = 0.1):
    """(inf, sup) of u/t and the band (min lower/t, max upper/t) over nodes in (0, t_max]."""
    mask = (grid.t > 0) & (grid.t <= t_max)
    t, tc = grid.t[mask], grid.tc[mask]
    ratios = grid.u[mask] / t
    band_lo = env.lower(t, tc) / t
    band_hi = env.upper(t, tc) / t
    return (float(np.min(ratios)), float(np.max(ratios))), (float(np.min(band_lo)), float(np.max(band_hi)))


@dataclass(frozen=True)
class VerificationReport:
    residual_weighted_sup: float
    bc_errors: Tuple[float, float]
    containment_violation: float
    concavity_violation: float
    growth_ratios: Optional[Tuple[float, float]]
    growth_band: Optional[Tuple[float, float]]
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self):
        return [k for k, ok in self.checks.items() if not ok]

    def as_dict(self):
        out = {
            "residual_weighted_sup": repr(self.residual_weighted_sup),
            "bc_error_0": repr(self.bc_errors[0]),
            "bc_error_1": repr(self.bc_errors[1]),
            "containment_violation": repr(self.containment_violation),
            "concavity_violation": repr(self.concavity_violation),
        }
        if self.growth_ratios is None:
            out["growth_ratios"] = "skipped"
        else:
            out["growth_ratio_inf"] = repr(self.growth_ratios[0])
            out["growth_ratio_sup"] = repr(self.growth_ratios[1])
            out["growth_band_lo"] = repr(self.growth_band[0])
            out["growth_band_hi"] = repr(self.growth_band[1])
        for k, ok in self.checks.items():
            out[f"check_{k}"] = "pass" if ok else "fail"
        out["verdict"] = "pass" if self.passed else "fail"
        return out


def verify_solution(spec: ProblemSpec, env: Envelope, grid: SolutionGrid,
                    growth_envelope: Optional[Envelope] = None, tolerances=None) -> VerificationReport:
    """Residual, boundary conditions, containment, concavity and (when u(0) = 0) linear growth.

    ``growth_envelope`` supplies the band for the growth check; it defaults
    to ``env``.
    """
    tol = dict(TOLERANCES, **(tolerances or {}))
    res = residual_norm(spec, grid)
    bc = boundary_errors(spec, grid)
    cont = containment_violation(env, grid)
    conc = concavity_violation(grid)
    checks = {
        "residual": res <= tol["residual"],
        "bc": max(bc) <= tol["bc"],
        "containment": cont <= tol["containment"],
        "concavity": conc <= tol["concavity"],
    }
    ratios = band = None
    if spec.beta == 0:
        ratios, band = growth_ratios(grid, growth_envelope or env)
        eps = tol["growth"]
        checks["growth"] = band[0] - eps <= ratios[0] and ratios[1] <= band[1] + eps
    return VerificationReport(res, bc, cont, conc, ratios, band, checks)
