"""Quadrature over (0, 1) for integrands with endpoint singularities.

The mesh is geometric toward both endpoints and uniform in the middle; every
cell carries an 8-point Gauss-Legendre rule. Integrands are called as
``f(t, tc)`` with ``tc = 1 - t`` supplied separately, so that evaluation
next to ``t = 1`` does not suffer cancellation.

Per-level contributions near an endpoint behave like ``2^-(sigma+1)`` per
level for an integrand ~ ``d^sigma``; that ratio drives both the divergence
test and the geometric extrapolation of the uncovered tail ``[0, eps_min]``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from .expr import EndpointOrders, ladder_order

__all__ = [
    "GradedMesh",
    "IntegralResult",
    "ProbeResult",
    "Status",
    "build_mesh",
    "default_mesh",
    "integrate",
    "integrate_interval",
    "probe_divergence",
    "GAUSS_ORDER",
]

GAUSS_ORDER = 8
_GX, _GW = np.polynomial.legendre.leggauss(GAUSS_ORDER)

RTOL = 1e-10
ATOL = 1e-14
MARGIN = 0.02
# relative size of the tail-extrapolation disagreement tolerated for Finite
TAIL_RTOL = 1e-6
# a level ratio must sit this far below 1 to count as geometric decay
RATIO_EPS = 1e-6
PROBE_WINDOW = 6


class Status(str, enum.Enum):
    FINITE = "Finite"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


LEFT, MIDDLE, RIGHT = 0, 1, 2


@dataclass(frozen=True, eq=False)
class GradedMesh:
    levels: int
    h0: float
    cells_per_level: int
    nodes: np.ndarray
    nodes_c: np.ndarray
    cell_side: np.ndarray
    cell_level: np.ndarray

    @property
    def eps_min(self) -> float:
        return self.h0 * 2.0 ** (-self.levels)

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def widths(self) -> np.ndarray:
        w = np.diff(self.nodes)
        right = self.cell_side == RIGHT
        w[right] = self.nodes_c[:-1][right] - self.nodes_c[1:][right]
        return w

    def points(self, x: np.ndarray):
        """Map reference coordinates ``x`` in [-1, 1] (shape (n_cells, k)) to (t, tc)."""
        a = self.nodes[:-1, None]
        bc = self.nodes_c[1:, None]
        h = self.widths[:, None]
        right = (self.cell_side == RIGHT)[:, None]
        t_left = a + h * (x + 1) / 2
        tc_right = bc + h * (1 - x) / 2
        t = np.where(right, 1.0 - tc_right, t_left)
        tc = np.where(right, tc_right, 1.0 - t_left)
        return t, tc

    @cached_property
    def gauss(self):
        """Gauss points ``(t, tc, w)``, each shaped (n_cells, GAUSS_ORDER)."""
        x = np.broadcast_to(_GX, (self.n_cells, GAUSS_ORDER))
        t, tc = self.points(x)
        w = self.widths[:, None] * _GW[None, :] / 2
        return t, tc, w

    def level_sums(self, cell_values: np.ndarray):
        """Per-level sums: (left levels j=0..J-1, middle total, right levels)."""
        left = np.zeros(self.levels)
        right = np.zeros(self.levels)
        sel = self.cell_side == LEFT
        np.add.at(left, self.cell_level[sel], cell_values[sel])
        sel = self.cell_side == RIGHT
        np.add.at(right, self.cell_level[sel], cell_values[sel])
        middle = float(cell_values[self.cell_side == MIDDLE].sum())
        return left, middle, right


def build_mesh(J: int = 30, h0: float = 0.25, cells_per_level: int = 1) -> GradedMesh:
    """Geometric breakpoints ``h0 * 2^-j`` (j = 0..J) toward each endpoint."""
    if int(J) != J or J < 4:
        raise ValueError(f"mesh levels J must be an integer >= 4, got {J}")
    if not 0 < h0 <= 0.25:
        raise ValueError(f"h0 must lie in (0, 1/4], got {h0}")
    if int(cells_per_level) != cells_per_level or cells_per_level < 1:
        raise ValueError("cells_per_level must be a positive integer")
    J = int(J)
    k = int(cells_per_level)

    # distances to the nearer endpoint, increasing: eps_min .. h0
    dist = [h0 * 2.0 ** (-J)]
    level = []
    for j in range(J - 1, -1, -1):
        lo, hi = h0 * 2.0 ** (-j - 1), h0 * 2.0 ** (-j)
        for i in range(1, k + 1):
            dist.append(lo + (hi - lo) * i / k)
            level.append(j)
    dist = np.array(dist)
    level = np.array(level)

    n_mid = max(1, int(round((1 - 2 * h0) / h0))) * k
    mid = h0 + (1 - 2 * h0) * np.arange(1, n_mid) / n_mid

    nodes = np.concatenate([dist, mid, (1.0 - dist)[::-1]])
    nodes_c = np.concatenate([1.0 - dist, 1.0 - mid, dist[::-1]])
    side = np.concatenate([
        np.full(len(level), LEFT), np.full(n_mid, MIDDLE), np.full(len(level), RIGHT)
    ])
    cell_level = np.concatenate([level, np.full(n_mid, -1), level[::-1]])
    return GradedMesh(J, float(h0), k, nodes, nodes_c, side, cell_level)


@lru_cache(maxsize=8)
def default_mesh(J: int = 30, h0: float = 0.25, cells_per_level: int = 1) -> GradedMesh:
    return build_mesh(J, h0, cells_per_level)


@dataclass(frozen=True)
class ProbeResult:
    order: float
    ratio_order: float
    verdict: Status


@dataclass(frozen=True)
class IntegralResult:
    value: float
    status: Status
    tail_estimates: Tuple[float, float]
    order_used: EndpointOrders
    tail_uncertainty: float = 0.0
    mesh_value: float = 0.0
    probes: Tuple[Optional[ProbeResult], Optional[ProbeResult]] = field(default=(None, None), repr=False)

    @property
    def finite(self) -> bool:
        return self.status is Status.FINITE


def _ratio_signal(levels: np.ndarray):
    """Ratio-implied order and whether the last levels decay geometrically.

    ``levels`` is ordered outward-in (last entry nearest the endpoint).
    """
    window = np.abs(levels[-PROBE_WINDOW:])
    if not np.any(window > 0):
        return math.inf, True
    if np.any(window == 0):
        return math.nan, False
    ratios = window[1:] / window[:-1]
    decays = bool(np.all(ratios < 1 - RATIO_EPS))
    ratio_order = -1.0 - math.log2(ratios[-1])
    return ratio_order, decays


def _combine(order: float, ratio_order: float, decays: bool, margin: float) -> Status:
    if not decays:
        return Status.DIVERGENT if order <= -1 + margin else Status.INCONCLUSIVE
    if order > -1 + margin:
        return Status.FINITE
    # near-critical band: the ratio test decides, but only on the convergent side
    if order > -1 and ratio_order > -1:
        return Status.FINITE
    return Status.INCONCLUSIVE


def _tail(levels: np.ndarray):
    """Geometric extrapolation of the uncovered tail and its disagreement."""
    c = levels
    if c[-1] == 0:
        return 0.0, 0.0

    def extrapolate(r):
        return c[-1] * r / (1 - r) if 0 < r < 1 else 0.0

    r1 = abs(c[-1]) / abs(c[-2]) if c[-2] != 0 else 0.0
    r2 = abs(c[-2]) / abs(c[-3]) if c[-3] != 0 else 0.0
    t1, t2 = extrapolate(r1), extrapolate(r2)
    return t1, abs(t1 - t2)


def _probe_from_levels(func, endpoint, levels, declared_order, margin):
    if declared_order is None:
        order, _ = ladder_order(func, endpoint)
    else:
        order = declared_order
    ratio_order, decays = _ratio_signal(levels)
    return ProbeResult(order, ratio_order, _combine(order, ratio_order, decays, margin))


def integrate(
    f: Callable,
    mesh: Optional[GradedMesh] = None,
    orders: Optional[EndpointOrders] = None,
    rtol: float = RTOL,
    atol: float = ATOL,
    margin: float = MARGIN,
) -> IntegralResult:
    """Integrate ``f(t, tc)`` over (0, 1) and classify the result.

    ``orders`` (declared endpoint orders) replaces the ladder estimate in the
    divergence test; the ratio test always runs on the computed levels.
    """
    mesh = mesh or default_mesh()
    t, tc, w = mesh.gauss
    with np.errstate(all="ignore"):
        values = np.asarray(f(t.ravel(), tc.ravel()), dtype=float).reshape(t.shape)
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values.ravel()))[0]
        raise FloatingPointError(f"integrand not finite at t={t.ravel()[bad]:.6g}")
    cells = (values * w).sum(axis=1)
    left, middle, right = mesh.level_sums(cells)
    # nearest-to-endpoint level last
    left_in, right_in = left, right

    probes = []
    for endpoint, levels in ((0, left_in), (1, right_in)):
        declared = None
        if orders is not None and orders.declared:
            declared = orders.sigma0 if endpoint == 0 else orders.sigma1
        probes.append(_probe_from_levels(f, endpoint, levels, declared, margin))
    order_used = orders if (orders is not None and orders.declared) else EndpointOrders(
        probes[0].order, probes[1].order, declared=False
    )

    mesh_value = float(left.sum() + middle + right.sum())
    statuses = [p.verdict for p in probes]
    if Status.DIVERGENT in statuses:
        return IntegralResult(math.inf, Status.DIVERGENT, (math.inf, math.inf), order_used,
                              math.inf, mesh_value, tuple(probes))

    (t0, u0), (t1, u1) = _tail(left_in), _tail(right_in)
    value = mesh_value + t0 + t1
    uncertainty = u0 + u1
    status = Status.FINITE
    if Status.INCONCLUSIVE in statuses:
        status = Status.INCONCLUSIVE
    elif uncertainty > max(rtol, TAIL_RTOL) * abs(value) + atol:
        status = Status.INCONCLUSIVE
    return IntegralResult(value, status, (t0, t1), order_used, uncertainty, mesh_value, tuple(probes))


def integrate_interval(f: Callable, lo: float, hi: float, mesh: Optional[GradedMesh] = None, **kwargs):
    """Integrate ``f(t, tc)`` over ``(lo, hi)`` by the affine map onto (0, 1)."""
    if not 0 <= lo < hi <= 1:
        raise ValueError("need 0 <= lo < hi <= 1")
    h = hi - lo

    def mapped(x, xc):
        return h * f(lo + h * x, (1.0 - hi) + h * xc)

    return integrate(mapped, mesh, **kwargs)


def probe_divergence(f: Callable, endpoint: int, mesh: Optional[GradedMesh] = None,
                     margin: float = MARGIN) -> ProbeResult:
    """Order estimate plus level-ratio test at one endpoint; never raises."""
    mesh = mesh or default_mesh()
    try:
        t, tc, w = mesh.gauss
        with np.errstate(all="ignore"):
            values = np.asarray(f(t.ravel(), tc.ravel()), dtype=float).reshape(t.shape)
        cells = (values * w).sum(axis=1)
        left, _, right = mesh.level_sums(cells)
        levels = left if endpoint == 0 else right
        if not np.all(np.isfinite(levels)):
            raise FloatingPointError
        return _probe_from_levels(f, endpoint, levels, None, margin)
    except Exception:
        return ProbeResult(math.nan, math.nan, Status.INCONCLUSIVE)
