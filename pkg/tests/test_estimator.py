import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from emdenfowler.estimator import EmdenFowlerSolver, check_points, check_problem
from emdenfowler.problem import BoundaryCase, ProblemError

MIXED = dict(p="(t*(1.5-t))^2", q="(t*(1.5-t))^2", lam=2, m=2, alpha=1, beta=0, gamma=1, delta=1)


def test_fit_predict():
    est = EmdenFowlerSolver().fit(MIXED)
    t = np.linspace(0, 1, 11)
    assert np.allclose(est.predict(t), t * (1.5 - t), atol=1e-12)
    assert est.case_ is BoundaryCase.II
    assert est.converged_ and est.report_.passed
    assert est.residual() <= 1e-9


def test_params_round_trip():
    est = EmdenFowlerSolver(method="picard", theta=0.3)
    params = est.get_params()
    assert params["method"] == "picard" and params["theta"] == 0.3
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(tol=1e-8)
    assert est.tol == 1e-8


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        EmdenFowlerSolver().predict([0.5])


def test_no_solution_raises():
    with pytest.raises(ValueError, match="no positive"):
        EmdenFowlerSolver().fit(dict(MIXED, p="t^(-2)", q="t^(-3)"))


@pytest.mark.parametrize("bad", [[0.5, np.nan], [1.5], [[0.1, 0.2], [0.3, 0.4]]])
def test_check_points(bad):
    with pytest.raises(ValueError):
        check_points(bad)


def test_check_points_column():
    assert check_points(np.array([[0.1], [0.2]])).shape == (2,)


def test_check_problem():
    with pytest.raises(TypeError):
        check_problem([1, 2, 3])
    with pytest.raises(ProblemError):
        check_problem(dict(MIXED, lam=-1))
