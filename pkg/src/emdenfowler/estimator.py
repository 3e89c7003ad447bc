"""Estimator-style facade: ``fit`` a problem, ``predict`` the solution at points."""
from __future__ import annotations

from typing import Mapping, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conditions import Verdict, classify
from .problem import ProblemSpec, validate_and_classify
from .quad import build_mesh
from .solver import solve
from .verify import verify_solution

__all__ = ["EmdenFowlerSolver", "check_problem", "check_points"]


def check_problem(problem: Union[ProblemSpec, Mapping]) -> ProblemSpec:
    """Accept a ProblemSpec or a mapping of ``from_strings`` keyword arguments."""
    if isinstance(problem, ProblemSpec):
        spec = problem
    elif isinstance(problem, Mapping):
        spec = ProblemSpec.from_strings(**problem)
    else:
        raise TypeError(f"expected ProblemSpec or mapping, got {type(problem).__name__}")
    validate_and_classify(spec)
    return spec


def check_points(t) -> np.ndarray:
    """1-D float array of finite points in [0, 1]."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 2 and t.shape[1] == 1:
        t = t[:, 0]
    if t.ndim > 1:
        raise ValueError(f"expected 1-D points, got shape {t.shape}")
    t = np.atleast_1d(t)
    if not np.all(np.isfinite(t)):
        raise ValueError("points must be finite")
    if np.any((t < 0) | (t > 1)):
        raise ValueError("points must lie in [0, 1]")
    return t


class EmdenFowlerSolver(BaseEstimator):
    """Positive solution of u'' + p u^-lam + q u^-m = 0 with two-point boundary conditions.

    Parameters
    ----------
    method : {"newton", "picard"}
    mesh_levels : int
        Geometric refinement levels toward each endpoint.
    h0 : float
        Width of the first graded cell.
    cells_per_level : int
    theta : float
        Picard damping.
    tol : float
    max_iter : int or None
        None selects the method's default.
    verify : bool
        Run the independent verification after solving.

    Attributes
    ----------
    spec_, case_, classification_, envelope_, grid_, report_
    """

    def __init__(self, method="newton", mesh_levels=30, h0=0.25, cells_per_level=2,
                 theta=0.5, tol=1e-10, max_iter=None, verify=True):
        self.method = method
        self.mesh_levels = mesh_levels
        self.h0 = h0
        self.cells_per_level = cells_per_level
        self.theta = theta
        self.tol = tol
        self.max_iter = max_iter
        self.verify = verify

    def fit(self, problem, y=None):
        spec = check_problem(problem)
        self.classification_ = classify(spec)
        if self.classification_.c_exists is Verdict.NO:
            raise ValueError("no positive C[0,1] solution exists for this problem")
        mesh = build_mesh(self.mesh_levels, self.h0, self.cells_per_level)
        grid, env = solve(spec, method=self.method, mesh=mesh, theta=self.theta,
                          tol=self.tol, max_iter=self.max_iter)
        self.spec_ = spec
        self.case_ = spec.case
        self.envelope_ = env
        self.grid_ = grid
        self.converged_ = grid.converged
        self.report_ = verify_solution(spec, env, grid) if self.verify else None
        return self

    def predict(self, t):
        check_is_fitted(self, "grid_")
        t = check_points(t)
        return self.grid_.evaluate(t)

    def residual(self):
        """sup |u - A(u)| at the solution."""
        check_is_fitted(self, "grid_")
        return self.grid_.residual
