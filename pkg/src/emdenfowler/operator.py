"""Green kernel, truncated right-hand side and the discrete integral operator.

The operator is a Nystrom discretisation: unknowns live at the Gauss points
of the graded mesh (plus two closing cells ``[0, eps]`` and ``[1 - eps, 1]``).
The kernel has a kink on the diagonal, so for every evaluation point the cell
containing it is split at that point and integrated with product weights
built from the Lagrange basis through the cell's Gauss points.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .grid import SolutionGrid
from .quad import GAUSS_ORDER, LEFT, MIDDLE, RIGHT, GradedMesh

__all__ = [
    "GreenKernel",
    "TruncatedRHS",
    "BoundRHS",
    "DiscreteOperator",
    "green_eval",
    "truncated_rhs",
    "apply_A",
    "jacobian_apply",
]

_GX, _GW = np.polynomial.legendre.leggauss(GAUSS_ORDER)
# barycentric weights of the Gauss nodes
_BW = np.array([1.0 / np.prod(_GX[j] - np.delete(_GX, j)) for j in range(GAUSS_ORDER)])


@dataclass(frozen=True)
class GreenKernel:
    """G(t, s) = (alpha min + beta)(gamma (1 - max) + delta) / rho."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    @property
    def rho(self) -> float:
        return self.gamma * self.beta + self.alpha * self.gamma + self.alpha * self.delta

    @classmethod
    def for_spec(cls, spec):
        return cls(spec.alpha, spec.beta, spec.gamma, spec.delta)

    def phi(self, t):
        return self.alpha * t + self.beta

    def psi(self, tc):
        return self.gamma * tc + self.delta

    def __call__(self, t, s, tc=None, sc=None):
        t, s = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
        tc = 1.0 - t if tc is None else np.asarray(tc, dtype=float)
        sc = 1.0 - s if sc is None else np.asarray(sc, dtype=float)
        below = _below(t, s, tc, sc)
        lo_phi = self.phi(np.where(below, s, t))
        hi_psi = self.psi(np.where(below, tc, sc))
        return lo_phi * hi_psi / self.rho

    def dt(self, t, s, tc=None, sc=None):
        """dG/dt; at s == t the right-hand (s > t) branch is used."""
        t, s = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
        tc = 1.0 - t if tc is None else np.asarray(tc, dtype=float)
        sc = 1.0 - s if sc is None else np.asarray(sc, dtype=float)
        below = _below(t, s, tc, sc)
        return np.where(below, -self.gamma * self.phi(s), self.alpha * self.psi(sc)) / self.rho


def _below(t, s, tc, sc):
    # compare in the complement coordinate near 1, where it is exact
    return np.where(t > 0.5, sc > tc, s < t)


def green_eval(k: GreenKernel, t: float, s: float) -> float:
    return float(k(t, s))


class TruncatedRHS:
    """f(t, u) = p(t) c(u)^-lam + q(t) c(u)^-m, c(u) = clamp of u into the envelope."""

    def __init__(self, spec, envelope):
        self.spec = spec
        self.envelope = envelope

    def bind(self, t, tc=None) -> "BoundRHS":
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tc = 1.0 - t if tc is None else np.atleast_1d(np.asarray(tc, dtype=float))
        lo = self.envelope.lower(t, tc)
        hi = self.envelope.upper(t, tc)
        if np.any(lo <= 0):
            bad = t[np.flatnonzero(lo <= 0)[0]]
            raise ValueError(f"lower envelope is not positive at t={bad:.6g}")
        return BoundRHS(self.spec.p(t, tc), self.spec.q(t, tc), lo, hi, self.spec.lam, self.spec.m)


@dataclass(frozen=True, eq=False)
class BoundRHS:
    """The truncated right-hand side frozen at a fixed set of points."""

    p: np.ndarray
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lam: float
    m: float

    def clamp(self, u):
        return np.minimum(np.maximum(u, self.lower), self.upper)

    def __call__(self, u):
        c = self.clamp(u)
        return self.p * c**-self.lam + self.q * c**-self.m

    def du(self, u):
        """df/du: zero wherever the clamp is active."""
        inside = (u > self.lower) & (u < self.upper)
        c = self.clamp(u)
        d = -self.lam * self.p * c ** (-self.lam - 1) - self.m * self.q * c ** (-self.m - 1)
        return np.where(inside, d, 0.0)

    def scaled(self, factor):
        return replace(self, p=self.p * factor, q=self.q * factor)


def truncated_rhs(f: TruncatedRHS, t: float, u: float) -> float:
    return float(f.bind(t)(np.atleast_1d(float(u)))[0])


@dataclass(frozen=True, eq=False)
class _Cells:
    lo: np.ndarray
    lo_c: np.ndarray
    hi: np.ndarray
    hi_c: np.ndarray
    right: np.ndarray  # cells parametrised in the complement coordinate

    @property
    def width(self):
        return np.where(self.right, self.lo_c - self.hi_c, self.hi - self.lo)

    def map(self, idx, x):
        """Reference coordinate x in [-1, 1] of cells idx -> (t, tc)."""
        h = self.width[idx]
        t_left = self.lo[idx] + h * (x + 1) / 2
        tc_right = self.hi_c[idx] + h * (1 - x) / 2
        right = self.right[idx]
        return np.where(right, 1.0 - tc_right, t_left), np.where(right, tc_right, 1.0 - t_left)

    def locate(self, t, tc):
        left = np.searchsorted(self.lo, t, side="right") - 1
        right = np.searchsorted(-self.lo_c, -tc, side="right") - 1
        idx = np.clip(np.where(t > 0.5, right, left), 0, len(self.lo) - 1)
        h = self.width[idx]
        xi_left = 2 * (t - self.lo[idx]) / h - 1
        xi_right = 1 - 2 * (tc - self.hi_c[idx]) / h
        xi = np.clip(np.where(self.right[idx], xi_right, xi_left), -1.0, 1.0)
        return idx, xi


def _closed_cells(mesh: GradedMesh) -> _Cells:
    n = mesh.nodes
    nc = mesh.nodes_c
    lo = np.concatenate([[0.0], n[:-1], [n[-1]]])
    hi = np.concatenate([[n[0]], n[1:], [1.0]])
    lo_c = np.concatenate([[1.0], nc[:-1], [nc[-1]]])
    hi_c = np.concatenate([[nc[0]], nc[1:], [0.0]])
    right = np.concatenate([[False], mesh.cell_side == RIGHT, [True]])
    return _Cells(lo, lo_c, hi, hi_c, right)


def _lagrange(eta):
    """Lagrange basis of the Gauss nodes evaluated at eta (..., k) -> (..., k, 8)."""
    diff = eta[..., None] - _GX
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = _BW / diff
        basis = terms / terms.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    basis = np.where(hit[..., None], exact.astype(float), basis)
    return basis


class DiscreteOperator:
    """u -> lift + scale * int_0^1 G(x, s) f(s, u(s)) ds on a graded mesh.

    ``interval = (a, b)`` rescales a problem posed on [a, b] to [0, 1]
    (``scale = (b - a)^2``); ``lift`` is the affine part carrying
    inhomogeneous Dirichlet data, given as ``(value_at_0, value_at_1)`` in
    the rescaled variable, or None.
    """

    def __init__(self, kernel: GreenKernel, mesh: GradedMesh, rhs: Optional[TruncatedRHS] = None,
                 interval: Tuple[float, float] = (0.0, 1.0), lift=None):
        self.kernel = kernel
        self.mesh = mesh
        self.interval = (float(interval[0]), float(interval[1]))
        self.lift = lift
        self.cells = _closed_cells(mesh)
        n_cells = len(self.cells.lo)
        idx = np.repeat(np.arange(n_cells), GAUSS_ORDER)
        x = np.tile(_GX, n_cells)
        self.x, self.xc = self.cells.map(idx, x)
        self.w = np.repeat(self.cells.width, GAUSS_ORDER) * np.tile(_GW, n_cells) / 2
        self.gauss_cell = idx
        self.rhs = rhs
        self._bound = None
        if rhs is not None:
            t, tc = self.physical(self.x, self.xc)
            self._bound = rhs.bind(t, tc).scaled(self.scale)

    @property
    def scale(self) -> float:
        a, b = self.interval
        return (b - a) ** 2

    @property
    def length(self) -> float:
        a, b = self.interval
        return b - a

    @property
    def bound(self) -> BoundRHS:
        if self._bound is None:
            raise ValueError("operator assembled without a right-hand side")
        return self._bound

    def physical(self, x, xc):
        a, b = self.interval
        return a + (b - a) * x, (1.0 - b) + (b - a) * xc

    def reference(self, t, tc):
        a, b = self.interval
        return (t - a) / (b - a), (tc - (1.0 - b)) / (b - a)

    # --- quadrature rows -------------------------------------------------

    def rows(self, x, xc, derivative=False):
        """Weights r with sum_j r[i, j] h(s_j) ~ int G(x_i, s) h(s) ds (or dG/dt)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xc = np.atleast_1d(np.asarray(xc, dtype=float))
        k = self.kernel.dt if derivative else self.kernel
        out = k(x[:, None], self.x[None, :], xc[:, None], self.xc[None, :]) * self.w[None, :]

        cell, xi = self.cells.locate(x, xc)
        h = self.cells.width[cell][:, None]
        g = (_GX + 1) / 2
        eta = np.concatenate([-1 + (xi[:, None] + 1) * g, xi[:, None] + (1 - xi[:, None]) * g], axis=1)
        wsub = np.concatenate([(xi[:, None] + 1) / 2 * _GW, (1 - xi[:, None]) / 2 * _GW], axis=1) * h / 2
        cells2 = np.broadcast_to(cell[:, None], eta.shape)
        s, sc = self.cells.map(cells2, eta)
        kv = k(x[:, None], s, xc[:, None], sc) * wsub
        block = np.einsum("pk,pkj->pj", kv, _lagrange(eta))
        cols = cell[:, None] * GAUSS_ORDER + np.arange(GAUSS_ORDER)
        np.put_along_axis(out, cols, block, axis=1)
        return out

    @cached_property
    def K(self):
        return self.rows(self.x, self.xc)

    @cached_property
    def collocation(self):
        """Output nodes (reference coordinates): both ends, mesh nodes and all Gauss points."""
        xs = np.concatenate([[0.0], self.mesh.nodes, self.x, [1.0]])
        xcs = np.concatenate([[1.0], self.mesh.nodes_c, self.xc, [0.0]])
        order = np.argsort(xs, kind="stable")
        return xs[order], xcs[order]

    @cached_property
    def _node_rows(self):
        x, xc = self.collocation
        return self.rows(x, xc), self.rows(x, xc, derivative=True)

    # --- affine part -----------------------------------------------------------

    def _lift(self, x, derivative=False):
        if self.lift is None:
            return 0.0 if not derivative else 0.0
        v0, v1 = self.lift
        return (v1 - v0) if derivative else v0 + (v1 - v0) * x

    # --- actions ---------------------------------------------------------

    def potential(self, values):
        """int G(x_i, s) h(s) ds at the Gauss points, for h sampled there."""
        return self.K @ values

    def apply(self, u):
        """(A u) at the Gauss points."""
        return self._lift(self.x) + self.K @ self.bound(u)

    def residual(self, u):
        return u - self.apply(u)

    def jacobian(self, u):
        """Matrix of A'(u) at the Gauss points."""
        return self.K * self.bound.du(u)[None, :]

    def jacobian_apply(self, u, v):
        return self.K @ (self.bound.du(u) * v)

    def nodes(self, u):
        """Physical nodes, values and physical derivatives at the collocation nodes."""
        x, xc = self.collocation
        R, D = self._node_rows
        f = self.bound(u)
        values = self._lift(x) + R @ f
        derivs = (self._lift(x, derivative=True) + D @ f) / self.length
        t, tc = self.physical(x, xc)
        return t, tc, values, derivs

    def evaluate(self, t, tc, u):
        """u(t) anywhere in the physical interval via the integral representation."""
        x, xc = self.reference(np.atleast_1d(t), np.atleast_1d(tc))
        return self._lift(x) + self.rows(x, xc) @ self.bound(u)

    def interpolate_nodes(self, grid: SolutionGrid):
        """Gauss-point values from node values (monotone cubic), for foreign grids."""
        from scipy.interpolate import PchipInterpolator

        t, tc = self.physical(self.x, self.xc)
        return PchipInterpolator(grid.t, grid.u, extrapolate=True)(t)

    def to_grid(self, u, **meta) -> SolutionGrid:
        t, tc, values, derivs = self.nodes(u)
        return SolutionGrid(t, tc, values, derivs, gauss_u=np.array(u), operator=self, **meta)


def _gauss_values(op: DiscreteOperator, grid: SolutionGrid):
    if grid.gauss_u is not None and len(grid.gauss_u) == len(op.x):
        return grid.gauss_u
    return op.interpolate_nodes(grid)


def apply_A(op: DiscreteOperator, u: SolutionGrid) -> SolutionGrid:
    """One application of the integral operator to a grid."""
    ug = _gauss_values(op, u)
    return op.to_grid(op.apply(ug), method="apply_A")


def jacobian_apply(op: DiscreteOperator, u: SolutionGrid, v: SolutionGrid) -> SolutionGrid:
    """A'(u) v as a grid (v's affine part is ignored: the derivative is linear)."""
    ug, vg = _gauss_values(op, u), _gauss_values(op, v)
    w = op.jacobian_apply(ug, vg)
    x, xc = op.collocation
    R, D = op._node_rows
    f = op.bound.du(ug) * vg
    t, tc = op.physical(x, xc)
    return SolutionGrid(t, tc, R @ f, D @ f / op.length, gauss_u=w, method="jacobian_apply")
