from types import SimpleNamespace

import numpy as np
import pytest

from emdenfowler.grid import SolutionGrid
from emdenfowler.operator import (
    DiscreteOperator,
    GreenKernel,
    TruncatedRHS,
    apply_A,
    green_eval,
    jacobian_apply,
    truncated_rhs,
)
from emdenfowler.quad import build_mesh

from conftest import make_spec

DIRICHLET = GreenKernel(1, 0, 1, 0)
ROBIN = GreenKernel(1, 1, 1, 1)


def band(lo, hi):
    const = lambda value: (lambda t, tc=None: np.full(np.shape(np.atleast_1d(t)), value))
    return SimpleNamespace(lower=const(lo), upper=const(hi))


@pytest.mark.parametrize(
    "kernel, t, s, expected",
    [(DIRICHLET, 0.25, 0.5, 0.125), (DIRICHLET, 0.5, 0.5, 0.25), (ROBIN, 0.5, 0.5, 0.75)],
)
def test_kernel_values(kernel, t, s, expected):
    assert green_eval(kernel, t, s) == pytest.approx(expected, rel=1e-15)


def _integral_closed_form(kernel, t):
    # solution of -u'' = 1 with the kernel's boundary conditions
    a, b, g, d = kernel.alpha, kernel.beta, kernel.gamma, kernel.delta
    # u = -t^2/2 + c1 t + c0
    A = np.array([[a, -b], [g, g + d]])
    rhs = np.array([0.0, g / 2 + d])
    c0, c1 = np.linalg.solve(A, rhs)
    return -t * t / 2 + c1 * t + c0


@pytest.mark.parametrize("kernel", [DIRICHLET, ROBIN], ids=["dirichlet", "robin"])
def test_kernel_row_integral(kernel):
    op = DiscreteOperator(kernel, build_mesh(30, 0.25, 2))
    t = np.linspace(0, 1, 101)
    values = op.rows(t, 1 - t) @ np.ones(len(op.x))
    assert np.max(np.abs(values - _integral_closed_form(kernel, t))) <= 1e-10


def test_dirichlet_potential_examples():
    op = DiscreteOperator(DIRICHLET, build_mesh(30, 0.25, 2))
    v = op.rows(np.array([0.5, 0.25]), np.array([0.5, 0.75])) @ np.ones(len(op.x))
    assert v == pytest.approx([0.125, 0.09375], abs=1e-12)


@pytest.mark.parametrize("kernel", [DIRICHLET, ROBIN, GreenKernel(2, 0.5, 0.3, 4)])
def test_kernel_symmetry_and_sign(kernel, rng):
    t, s = rng.random(10_000), rng.random(10_000)
    a, b = kernel(t, s), kernel(s, t)
    assert np.max(np.abs(a - b)) <= 1e-15
    assert np.all(a >= 0)


@pytest.mark.parametrize("u, expected", [(0.05, 20.0), (0.2, 10.0), (0.9, 4.0)])
def test_truncated_rhs_examples(u, expected):
    f = TruncatedRHS(make_spec(p="1", q="1"), band(0.1, 0.5))
    assert truncated_rhs(f, 0.3, u) == pytest.approx(expected, rel=1e-15)


def test_truncation_idempotent(rng):
    bound = TruncatedRHS(make_spec(p="1", q="1"), band(0.1, 0.5)).bind(rng.random(50))
    u = rng.random(50)
    assert np.array_equal(bound(u), bound(bound.clamp(u)))


def test_rhs_derivative():
    bound = TruncatedRHS(make_spec(p="1", q="1"), band(0.1, 0.5)).bind(np.array([0.3, 0.3, 0.3]))
    assert bound.du(np.array([0.2, 0.05, 0.9])) == pytest.approx([-50.0, 0.0, 0.0])


@pytest.fixture(scope="module")
def manufactured_op(dirichlet):
    _, spec, grid, env = dirichlet
    return spec, env, DiscreteOperator(GreenKernel.for_spec(spec), build_mesh(30, 0.25, 2), TruncatedRHS(spec, env))


def _exact_grid(op, func):
    t, tc = op.physical(op.x, op.xc)
    x, xc = op.collocation
    return SolutionGrid(x, xc, func(x, xc), np.zeros_like(x), gauss_u=func(t, tc))


def test_apply_on_exact_solution(manufactured_op):
    _, _, op = manufactured_op
    u = _exact_grid(op, lambda t, tc: t * tc)
    out = apply_A(op, u)
    assert np.max(np.abs(out.u - u.u)) <= 5e-6


def test_jacobian_matches_central_difference(manufactured_op):
    _, _, op = manufactured_op
    u = _exact_grid(op, lambda t, tc: t * tc)
    v = _exact_grid(op, lambda t, tc: np.sin(np.pi * t) * t * tc)
    eps = 1e-6
    plus = op.apply(u.gauss_u + eps * v.gauss_u)
    minus = op.apply(u.gauss_u - eps * v.gauss_u)
    fd = (plus - minus) / (2 * eps)
    jv = jacobian_apply(op, u, v).gauss_u
    assert np.max(np.abs(jv - fd)) <= 1e-4 * np.max(np.abs(fd))


def test_jacobian_linear_in_v(manufactured_op, rng):
    _, _, op = manufactured_op
    u = _exact_grid(op, lambda t, tc: t * tc)
    v = rng.random(len(op.x))
    a = op.jacobian_apply(u.gauss_u, 3.0 * v)
    b = 3.0 * op.jacobian_apply(u.gauss_u, v)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_antitone_on_band(manufactured_op, rng):
    _, _, op = manufactured_op
    lo, hi = op.bound.lower, op.bound.upper
    for _ in range(5):
        s = np.sort(rng.random(2))
        u = lo + s[0] * (hi - lo)
        v = lo + s[1] * (hi - lo)
        assert np.all(op.apply(u) >= op.apply(v) - 1e-12)


from hypothesis import given, settings
from hypothesis import strategies as st

_coef = st.floats(0.0, 5.0)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.1, 5), b=_coef, g=st.floats(0.1, 5), d=_coef,
       t=st.floats(0, 1), s=st.floats(0, 1))
def test_kernel_symmetric_nonnegative_property(a, b, g, d, t, s):
    k = GreenKernel(a, b, g, d)
    assert k(t, s) == pytest.approx(k(s, t), rel=1e-15, abs=1e-300)
    assert k(t, s) >= 0
