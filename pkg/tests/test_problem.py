import numpy as np
import pytest

from emdenfowler.problem import (
    BoundaryCase,
    OutsideHypothesisWarning,
    ProblemError,
    SAMPLE_POINTS,
    reflect,
    validate_and_classify,
)

from conftest import make_spec


@pytest.mark.parametrize(
    "coeffs, case, rho",
    [
        ((1, 1, 1, 1), BoundaryCase.I, 3.0),
        ((1, 0, 1, 1), BoundaryCase.II, 2.0),
        ((1, 1, 1, 0), BoundaryCase.III, 2.0),
        ((1, 0, 1, 0), BoundaryCase.IV, 1.0),
    ],
)
def test_case_and_rho(coeffs, case, rho):
    a, b, g, d = coeffs
    spec = make_spec(alpha=a, beta=b, gamma=g, delta=d)
    assert validate_and_classify(spec) is case
    assert spec.rho == rho


@pytest.mark.parametrize("scale", [0.01, 1.0, 7.5])
@pytest.mark.parametrize("beta, delta", [(0, 0), (0, 1), (1, 0), (2, 3)])
def test_case_depends_only_on_zero_pattern(scale, beta, delta):
    base = make_spec(beta=beta, delta=delta)
    scaled = make_spec(alpha=scale, gamma=scale * 2, beta=beta, delta=delta)
    assert base.case is scaled.case


@pytest.mark.parametrize(
    "kwargs, match",
    [
        (dict(lam=0), "exponents"),
        (dict(m=-1), "exponents"),
        (dict(beta=-1), "beta"),
        (dict(alpha=0, beta=1, gamma=0, delta=1), "rho"),
        (dict(p="t-0.5"), r"p\(t\) is negative at t=0\.0"),
        (dict(q="sin(10*t)"), r"q\(t\) is negative"),
    ],
)
def test_validation_errors(kwargs, match):
    with pytest.raises(ProblemError, match=match):
        validate_and_classify(make_spec(**kwargs))


def test_single_term_warns():
    with pytest.warns(OutsideHypothesisWarning):
        validate_and_classify(make_spec(q="0"))


def test_reflect_swaps_cases():
    spec = make_spec(alpha=2, beta=1, gamma=3, delta=0, p="t^(-0.5)")
    r = reflect(spec)
    assert (r.alpha, r.beta, r.gamma, r.delta) == (3, 0, 2, 1)
    assert r.case is BoundaryCase.II
    assert r.p(np.array([0.75]))[0] == pytest.approx(2.0)


@pytest.mark.parametrize("beta, delta", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_reflect_case_map(beta, delta):
    expected = {BoundaryCase.II: BoundaryCase.III, BoundaryCase.III: BoundaryCase.II}
    spec = make_spec(beta=beta, delta=delta)
    assert reflect(spec).case is expected.get(spec.case, spec.case)


def test_reflect_is_involution():
    spec = make_spec(p="t^(-0.5)*(1-t)^2+sin(t)", q="exp(-t)", beta=1, delta=0)
    twice = reflect(reflect(spec))
    t = SAMPLE_POINTS[::10]
    assert np.array_equal(twice.p(t), spec.p(t))
    assert np.array_equal(twice.q(t), spec.q(t))
    assert twice.case is spec.case
