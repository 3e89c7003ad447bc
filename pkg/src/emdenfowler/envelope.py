"""Lower and upper solutions for the singular problem, with their constants.

Every profile used here is either a Green potential ``P(t) = int G(t,s) h(s) ds``
of a nonnegative density ``h`` (so that ``P'' = -h`` exactly and ``P``
satisfies the homogeneous boundary relations), a power of one, or a sum.
Potentials are tabulated as cumulative integrals on the graded mesh and
evaluated anywhere by a single partial-cell Gauss rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .conditions import c1_integrand
from .operator import GreenKernel
from .problem import BoundaryCase, ProblemSpec, reflect
from .quad import GAUSS_ORDER, GradedMesh, Status, build_mesh, integrate

__all__ = [
    "Envelope",
    "EnvelopeError",
    "GreenPotential",
    "build_envelope",
    "build_case1",
    "build_case2",
    "build_case4",
    "build_linear_growth",
    "exponent_n",
]

_GX, _GW = np.polynomial.legendre.leggauss(GAUSS_ORDER)


class EnvelopeError(RuntimeError):
    pass


def _args(t, tc):
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tc = 1.0 - t if tc is None else np.atleast_1d(np.asarray(tc, dtype=float))
    return scalar, t, tc


def _out(scalar, values):
    return float(values[0]) if scalar else values


class Profile:
    """A function on [0, 1] with first and second derivatives, called as ``(t, tc)``."""

    def value(self, t, tc):
        raise NotImplementedError

    def d1(self, t, tc):
        raise NotImplementedError

    def d2(self, t, tc):
        raise NotImplementedError

    def __call__(self, t, tc=None):
        scalar, t, tc = _args(t, tc)
        return _out(scalar, self.value(t, tc))


class _Tail:
    """Geometric model of the integral over [0, eps] from the last two levels.

    Contribution of the level ``x`` halvings below eps is ``c * r^x``.
    """

    def __init__(self, levels):
        c = levels[-1]
        r = abs(levels[-1]) / abs(levels[-2]) if levels[-2] != 0 else 0.0
        self.c, self.r = c, r

    @property
    def total(self):
        if self.c == 0 or self.r == 0:
            return 0.0
        return self.c * self.r / (1 - self.r) if self.r < 1 else math.inf

    def partial(self, x):
        """Integral over [eps 2^-x, eps]."""
        x = np.asarray(x, dtype=float)
        if self.c == 0 or self.r == 0:
            return np.zeros_like(x)
        if abs(self.r - 1) < 1e-12:
            return self.c * x
        with np.errstate(over="ignore"):
            return self.c * self.r * (self.r**x - 1) / (self.r - 1)

    def below(self, x):
        """Integral over [0, eps 2^-x] (needs a convergent tail)."""
        return self.total - self.partial(x)


class GreenPotential(Profile):
    """P(t) = [psi(t) int_0^t phi h + phi(t) int_t^1 psi h] / rho."""

    def __init__(self, kernel: GreenKernel, density: Callable, mesh: GradedMesh):
        self.kernel = kernel
        self.density = density
        self.mesh = mesh
        t, tc, w = mesh.gauss
        with np.errstate(all="ignore"):
            h = np.asarray(density(t.ravel(), tc.ravel()), dtype=float).reshape(t.shape)
        if not np.all(np.isfinite(h)):
            raise EnvelopeError("density is not finite on the mesh")
        A = (w * kernel.phi(t) * h).sum(axis=1)
        B = (w * kernel.psi(tc) * h).sum(axis=1)
        la, _, ra = mesh.level_sums(A)
        lb, _, rb = mesh.level_sums(B)
        self.tail_a0, self.tail_a1 = _Tail(la), _Tail(ra)
        self.tail_b0, self.tail_b1 = _Tail(lb), _Tail(rb)
        # F0 = int_0^t phi h and F1 = int_t^1 psi h at the mesh nodes
        self.F0 = np.concatenate([[self.tail_a0.total], self.tail_a0.total + np.cumsum(A)])
        self.F1 = np.concatenate([self.tail_b1.total + np.cumsum(B[::-1])[::-1], [self.tail_b1.total]])
        self.F0_total = self.F0[-1] + self.tail_a1.total
        self.F1_total = self.F1[0] + self.tail_b0.total

    def _segment(self, lo, lo_c, hi, hi_c, near_one):
        """Gauss points and weights on [lo, hi], shape (n, 8)."""
        h = np.where(near_one, lo_c - hi_c, hi - lo)[:, None]
        t_left = lo[:, None] + h * (_GX + 1) / 2
        tc_right = hi_c[:, None] + h * (1 - _GX) / 2
        nr = near_one[:, None]
        t = np.where(nr, 1.0 - tc_right, t_left)
        tc = np.where(nr, tc_right, 1.0 - t_left)
        return t, tc, h * _GW / 2

    def _integrals(self, t, tc):
        """(F0(t), F1(t)) for arbitrary points."""
        mesh = self.mesh
        eps = mesh.eps_min
        F0 = np.empty_like(t)
        F1 = np.empty_like(t)
        low = t < eps
        high = tc < eps
        mid = ~(low | high)

        if np.any(low):
            x = np.log2(eps / np.maximum(t[low], 1e-300))
            F0[low] = np.where(t[low] > 0, self.tail_a0.below(x), 0.0)
            F1[low] = self.F1[0] + np.where(t[low] > 0, self.tail_b0.partial(x), self.tail_b0.total)
        if np.any(high):
            x = np.log2(eps / np.maximum(tc[high], 1e-300))
            F1[high] = np.where(tc[high] > 0, self.tail_b1.below(x), 0.0)
            F0[high] = self.F0[-1] + np.where(tc[high] > 0, self.tail_a1.partial(x), self.tail_a1.total)
        if np.any(mid):
            tm, tcm = t[mid], tc[mid]
            nodes, nodes_c = mesh.nodes, mesh.nodes_c
            k_left = np.searchsorted(nodes, tm, side="right") - 1
            k_right = np.searchsorted(-nodes_c, -tcm, side="right") - 1
            near_one = tm > 0.5
            k = np.clip(np.where(near_one, k_right, k_left), 0, len(nodes) - 2)
            # left piece [node_k, t]
            s, sc, w = self._segment(nodes[k], nodes_c[k], tm, tcm, near_one)
            hv = self._density(s, sc)
            F0[mid] = self.F0[k] + (w * self.kernel.phi(s) * hv).sum(axis=1)
            s, sc, w = self._segment(tm, tcm, nodes[k + 1], nodes_c[k + 1], near_one)
            hv = self._density(s, sc)
            F1[mid] = self.F1[k + 1] + (w * self.kernel.psi(sc) * hv).sum(axis=1)
        return F0, F1

    def _density(self, s, sc):
        shape = s.shape
        with np.errstate(all="ignore"):
            v = np.asarray(self.density(s.ravel(), sc.ravel()), dtype=float).reshape(shape)
        return np.where(np.isfinite(v), v, 0.0)

    def value(self, t, tc):
        F0, F1 = self._integrals(t, tc)
        k = self.kernel
        with np.errstate(invalid="ignore"):
            out = (k.psi(tc) * F0 + k.phi(t) * F1) / k.rho
        # phi(0) = 0 kills a divergent F1 at t = 0 (and psi(1) = 0 at t = 1)
        out = np.where((t == 0) & (k.beta == 0), 0.0, out)
        out = np.where((tc == 0) & (k.delta == 0), 0.0, out)
        return out

    def d1(self, t, tc):
        F0, F1 = self._integrals(t, tc)
        k = self.kernel
        return (-k.gamma * F0 + k.alpha * F1) / k.rho

    def d2(self, t, tc):
        return -self.density(t, tc)


class _Power(Profile):
    def __init__(self, base: Profile, exponent: float):
        self.base, self.e = base, exponent

    def value(self, t, tc):
        return np.maximum(self.base.value(t, tc), 0.0) ** self.e

    def d1(self, t, tc):
        b = self.base.value(t, tc)
        with np.errstate(all="ignore"):
            return self.e * b ** (self.e - 1) * self.base.d1(t, tc)

    def d2(self, t, tc):
        b = self.base.value(t, tc)
        b1 = self.base.d1(t, tc)
        e = self.e
        with np.errstate(all="ignore"):
            return e * (e - 1) * b ** (e - 2) * b1**2 + e * b ** (e - 1) * self.base.d2(t, tc)


class _Sum(Profile):
    def __init__(self, a: Profile, b: Profile):
        self.a, self.b = a, b

    def value(self, t, tc):
        return self.a.value(t, tc) + self.b.value(t, tc)

    def d1(self, t, tc):
        return self.a.d1(t, tc) + self.b.d1(t, tc)

    def d2(self, t, tc):
        return self.a.d2(t, tc) + self.b.d2(t, tc)


class _Scaled(Profile):
    def __init__(self, base: Profile, k: float):
        self.base, self.k = base, k

    def value(self, t, tc):
        return self.k * self.base.value(t, tc)

    def d1(self, t, tc):
        return self.k * self.base.d1(t, tc)

    def d2(self, t, tc):
        return self.k * self.base.d2(t, tc)


class _Reflected(Profile):
    def __init__(self, base: Profile):
        self.base = base

    def value(self, t, tc):
        return self.base.value(tc, t)

    def d1(self, t, tc):
        return -self.base.d1(tc, t)

    def d2(self, t, tc):
        return self.base.d2(tc, t)


@dataclass(frozen=True, eq=False)
class Envelope:
    lower_profile: Profile
    upper_profile: Profile
    k1: float
    k2: float
    constants: Dict[str, float]
    case: BoundaryCase
    kind: str
    n: Optional[int] = None
    shared_profile: bool = False
    # t^1 (Case II) or t(1-t) (Case IV): the growth weight of the C^1 construction
    growth_weight: Optional[Callable] = field(default=None, repr=False)
    majorant: Optional[Callable] = field(default=None, repr=False)
    reflected: bool = False

    def lower(self, t, tc=None):
        return self.lower_profile(t, tc)

    def upper(self, t, tc=None):
        return self.upper_profile(t, tc)

    def lower_d1(self, t, tc=None):
        scalar, t, tc = _args(t, tc)
        return _out(scalar, self.lower_profile.d1(t, tc))

    def upper_d1(self, t, tc=None):
        scalar, t, tc = _args(t, tc)
        return _out(scalar, self.upper_profile.d1(t, tc))

    def lower_d2(self, t, tc=None):
        scalar, t, tc = _args(t, tc)
        return _out(scalar, self.lower_profile.d2(t, tc))

    def upper_d2(self, t, tc=None):
        scalar, t, tc = _args(t, tc)
        return _out(scalar, self.upper_profile.d2(t, tc))

    def boundary_residuals(self, spec: ProblemSpec):
        """((a v(0) - b v'(0), g v(1) + d v'(1)) for v = lower, same for upper)."""
        out = []
        for prof in (self.lower_profile, self.upper_profile):
            zero, one = np.array([0.0]), np.array([1.0])
            left = spec.alpha * prof.value(zero, one)[0]
            if spec.beta != 0:
                left -= spec.beta * prof.d1(zero, one)[0]
            right = spec.gamma * prof.value(one, zero)[0]
            if spec.delta != 0:
                right += spec.delta * prof.d1(one, zero)[0]
            out.append((float(left), float(right)))
        return tuple(out)

    def inequality_residuals(self, spec: ProblemSpec, t, tc=None):
        """v'' + p v^-lam + q v^-m for v = lower (should be >= 0) and upper (<= 0)."""
        _, t, tc = _args(t, tc)
        p, q = spec.p(t, tc), spec.q(t, tc)
        res = []
        for prof in (self.lower_profile, self.upper_profile):
            v = prof.value(t, tc)
            res.append(prof.d2(t, tc) + p * v**-spec.lam + q * v**-spec.m)
        return tuple(res)


def exponent_n(lam: float, m: float) -> int:
    """Smallest integer n >= 4 with n * min(lam, m) > 1."""
    mu = min(lam, m)
    n = max(4, math.floor(1.0 / mu) + 1)
    while n * mu <= 1:
        n += 1
    return n


def _finite(value_result, what):
    if value_result.status is not Status.FINITE:
        raise EnvelopeError(f"{what} is not finite ({value_result.status})")
    return float(value_result.value)


def _k_lower(L, lam, m):
    return min(1.0, L ** (-lam / (1 + lam)), L ** (-m / (1 + m)))


def _k_upper(L, lam, m):
    return max(1.0, L ** (-lam / (1 + lam)), L ** (-m / (1 + m)))


def _maximum(profile: Profile):
    """Max of a concave profile on [0, 1]."""
    grid = np.linspace(0, 1, 257)
    vals = profile(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda x: -profile(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(float(-res.fun), float(vals[i]))


def _mesh(mesh):
    return mesh if mesh is not None else build_mesh(30, 0.25, 1)


def _diag(kernel):
    """G(s, s) as an integrand weight."""
    return lambda s, sc: kernel.phi(s) * kernel.psi(sc) / kernel.rho


def build_case1(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> Envelope:
    """Both envelopes are multiples of the Green potential q1 of p + q."""
    if spec.case is not BoundaryCase.I:
        raise EnvelopeError("build_case1 needs beta > 0 and delta > 0")
    mesh = _mesh(mesh)
    kernel = GreenKernel.for_spec(spec)
    q1 = GreenPotential(kernel, spec.g, mesh)
    total = _finite(integrate(spec.g, mesh), "int (p+q)")
    diag = _diag(kernel)
    L1 = spec.beta * spec.delta / spec.rho * total
    L2 = _finite(integrate(lambda s, sc: diag(s, sc) * spec.g(s, sc), mesh), "L2")
    k1 = _k_lower(L2, spec.lam, spec.m)
    k2 = _k_upper(L1, spec.lam, spec.m)
    return Envelope(
        _Scaled(q1, k1), _Scaled(q1, k2), k1, k2,
        {"L1": L1, "L2": L2}, BoundaryCase.I, "C", shared_profile=True,
    )


def _build_dirichlet_side(spec, mesh, case, names):
    """Shared construction for Cases II and IV (R resp. Q, Gamma_1, Gamma_2)."""
    mesh = _mesh(mesh)
    kernel = GreenKernel.for_spec(spec)
    mu = spec.mu
    n = exponent_n(spec.lam, spec.m)
    gamma1 = GreenPotential(kernel, spec.g, mesh)
    root = _Power(gamma1, 1.0 / (n * mu))

    def density2(s, sc):
        g1 = gamma1.value(s, sc)
        with np.errstate(divide="ignore"):
            return spec.g(s, sc) * g1 ** (-1.0 / n)

    gamma2 = _Sum(GreenPotential(kernel, density2, mesh), root)
    diag = _diag(kernel)
    L_low = _finite(integrate(lambda s, sc: diag(s, sc) * spec.g(s, sc), mesh), names[0])
    root_max = _maximum(gamma1) ** (1.0 / (n * mu))
    L_up = _finite(integrate(lambda s, sc: diag(s, sc) * density2(s, sc), mesh), names[1]) + root_max
    k1 = _k_lower(L_low, spec.lam, spec.m)
    k2 = max(1.0, L_up**mu)
    root_name = "R0" if case is BoundaryCase.II else "Q0"
    return Envelope(
        _Scaled(gamma1, k1), _Scaled(gamma2, k2), k1, k2,
        {names[0]: L_low, names[1]: L_up, root_name: root_max}, case, "C", n=n,
    )


def build_case2(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> Envelope:
    if spec.case is not BoundaryCase.II:
        raise EnvelopeError("build_case2 needs beta = 0 and delta > 0")
    return _build_dirichlet_side(spec, mesh, BoundaryCase.II, ("L3", "L4"))


def build_case4(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> Envelope:
    if spec.case is not BoundaryCase.IV:
        raise EnvelopeError("build_case4 needs beta = delta = 0")
    return _build_dirichlet_side(spec, mesh, BoundaryCase.IV, ("L5", "L6"))


def _reflect_envelope(env: Envelope, case: BoundaryCase) -> Envelope:
    weight = env.growth_weight
    majorant = env.majorant
    return Envelope(
        _Reflected(env.lower_profile), _Reflected(env.upper_profile), env.k1, env.k2,
        dict(env.constants), case, env.kind, env.n, env.shared_profile,
        growth_weight=(lambda t, tc: weight(tc, t)) if weight else None,
        majorant=(lambda t, tc: majorant(tc, t)) if majorant else None,
        reflected=True,
    )


def build_linear_growth(spec: ProblemSpec, mesh: Optional[GradedMesh] = None) -> Envelope:
    """Linear-growth envelopes k1*Gamma <= u <= k2*Gamma for C^1 solutions."""
    case = spec.case
    if case is BoundaryCase.I:
        raise EnvelopeError("no separate C^1 construction in Case I")
    if case is BoundaryCase.III:
        return _reflect_envelope(build_linear_growth(reflect(spec), mesh), BoundaryCase.III)
    mesh = _mesh(mesh)
    kernel = GreenKernel.for_spec(spec)
    h = c1_integrand(spec, case)
    gamma = GreenPotential(kernel, h, mesh)
    diag = _diag(kernel)
    if case is BoundaryCase.II:
        factor = spec.delta / (spec.gamma + spec.delta)

        def weight(t, tc):
            return t
    else:
        factor = 1.0

        def weight(t, tc):
            return t * tc
    I1 = factor * _finite(integrate(lambda s, sc: diag(s, sc) * h(s, sc), mesh), "I1")
    I2 = _finite(integrate(h, mesh), "I2")
    k1 = _k_lower(I2, spec.lam, spec.m)
    k2 = _k_upper(I1, spec.lam, spec.m)

    def majorant(t, tc):
        base = k1 * I1 * weight(t, tc)
        return spec.p(t, tc) * base**-spec.lam + spec.q(t, tc) * base**-spec.m

    F_int = integrate(majorant, mesh)
    constants = {"I1": I1, "I2": I2, "F_integral": float(F_int.value)}
    return Envelope(
        _Scaled(gamma, k1), _Scaled(gamma, k2), k1, k2, constants, case, "C1",
        shared_profile=True, growth_weight=weight, majorant=majorant,
    )


def build_envelope(spec: ProblemSpec, mesh: Optional[GradedMesh] = None, kind: str = "C") -> Envelope:
    """Dispatch on the boundary case; Case III goes through the reflection."""
    if kind == "C1":
        return build_linear_growth(spec, mesh)
    case = spec.case
    if case is BoundaryCase.I:
        return build_case1(spec, mesh)
    if case is BoundaryCase.II:
        return build_case2(spec, mesh)
    if case is BoundaryCase.IV:
        return build_case4(spec, mesh)
    return _reflect_envelope(build_case2(reflect(spec), mesh), BoundaryCase.III)
