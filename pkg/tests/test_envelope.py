import math

import numpy as np
import pytest

from emdenfowler.envelope import EnvelopeError, build_envelope, build_linear_growth, exponent_n
from emdenfowler.problem import BoundaryCase

from conftest import make_spec

T = np.linspace(0.0005, 0.9995, 1000)


@pytest.fixture(scope="module")
def case1():
    return build_envelope(make_spec())


@pytest.fixture(scope="module")
def case2():
    return build_envelope(make_spec(beta=0))


@pytest.fixture(scope="module")
def case4():
    return build_envelope(make_spec(beta=0, delta=0))


def test_case1_constants(case1):
    assert case1.constants["L1"] == pytest.approx(1 / 3, abs=1e-10)
    assert case1.constants["L2"] == pytest.approx(13 / 18, abs=1e-10)
    assert case1.k1 == 1.0
    assert case1.k2 == pytest.approx(math.sqrt(3), abs=1e-10)


def test_case1_profile(case1):
    q1 = lambda t: case1.lower(t) / case1.k1
    assert q1(0.5) == pytest.approx(0.625, abs=1e-10)
    for t in (0.0, 1.0):
        assert q1(t) == pytest.approx(0.5, abs=1e-10)
        assert 1 / 3 <= q1(t) <= 13 / 18


def test_case1_shared_profile(case1):
    assert np.allclose(case1.upper(T) * case1.k1, case1.lower(T) * case1.k2, rtol=1e-15, atol=0)


def test_case1_inequalities(case1):
    spec = make_spec()
    lo, up = case1.inequality_residuals(spec, T)
    assert lo.min() >= -1e-8
    assert up.max() <= 1e-8


def test_case1_boundary(case1):
    (l0, l1), (u0, u1) = case1.boundary_residuals(make_spec())
    assert max(abs(l0), abs(l1), abs(u0), abs(u1)) <= 1e-8


def test_case2_constants(case2):
    assert case2.n == 4
    assert case2.constants["L3"] == pytest.approx(1 / 3, abs=1e-10)
    assert case2.k1 == 1.0
    gamma1 = case2.lower(0.5) / case2.k1
    assert gamma1 == pytest.approx(0.25, abs=1e-10)
    assert (1 / 3) * 0.5 * 0.75 <= gamma1 <= 1 / 3
    assert gamma1 ** 0.25 == pytest.approx(0.7071, abs=1e-4)


def test_case2_vanish_at_zero(case2):
    assert case2.lower(0.0) == 0.0
    assert case2.upper(0.0) == 0.0


def test_case2_boundary_and_order(case2):
    spec = make_spec(beta=0)
    (l0, l1), (u0, u1) = case2.boundary_residuals(spec)
    assert abs(l1) <= 1e-8
    assert u1 >= -1e-8
    assert np.min(case2.upper(T) - case2.lower(T)) >= -1e-10


def test_case4_constants(case4):
    assert case4.constants["L5"] == pytest.approx(1 / 6, abs=1e-10)
    assert case4.k1 == 1.0
    assert case4.k2 == max(1.0, case4.constants["L6"] ** 1.0)
    gamma1 = case4.lower(T) / case4.k1
    assert np.allclose(gamma1, T * (1 - T) / 2, rtol=1e-9, atol=1e-14)
    assert np.all(T * (1 - T) / 6 <= gamma1) and np.all(gamma1 <= 1 / 6)


def test_case4_vanish_at_ends(case4):
    for t in (0.0, 1.0):
        assert case4.lower(t) == 0.0
        assert case4.upper(t) == 0.0


def test_linear_growth_constants():
    env = build_linear_growth(make_spec(p="1", q="0", lam=0.5, m=0.5, beta=0))
    assert env.constants["I2"] == pytest.approx(2.0, abs=1e-8)
    assert env.k1 == pytest.approx(2 ** (-1 / 3), abs=1e-8)
    small = np.array([1e-4, 1e-6, 1e-8])
    ratios = env.lower(small) / small
    assert np.all(ratios > 0)
    assert ratios[-1] == pytest.approx(ratios[-2], rel=1e-3)
    assert np.allclose(env.upper(T) * env.k1, env.lower(T) * env.k2, rtol=1e-15, atol=0)


def test_linear_growth_case1_rejected():
    with pytest.raises(EnvelopeError):
        build_linear_growth(make_spec())


def test_case3_is_mirror_of_case2():
    e3 = build_envelope(make_spec(delta=0, p="t", q="1"))
    e2 = build_envelope(make_spec(beta=0, p="1-t", q="1"))
    assert e3.case is BoundaryCase.III
    assert np.allclose(e3.lower(T), e2.lower(1 - T[::-1])[::-1], rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize(
    "lam, m, n",
    [(1, 1, 4), (0.5, 2, 4), (0.2, 3, 6), (0.25, 1, 5), (0.1, 0.1, 11), (3, 3, 4)],
)
def test_exponent_n(lam, m, n):
    assert exponent_n(lam, m) == n
    assert n * min(lam, m) > 1 and n >= 4
