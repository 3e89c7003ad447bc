"""Positive solutions of singular two-point problems u'' + p u^-lam + q u^-m = 0."""
from .conditions import ClassificationReport, Verdict, classify
from .envelope import Envelope, build_envelope
from .estimator import EmdenFowlerSolver
from .expr import Expression, parse
from .grid import SolutionGrid
from .problem import BoundaryCase, ProblemError, ProblemSpec, validate_and_classify
from .quad import GradedMesh, Status, build_mesh, integrate
from .solver import solve, solve_newton, solve_picard, solve_regularized
from .verify import VerificationReport, verify_solution

__version__ = "0.1.0"

__all__ = [
    "BoundaryCase",
    "ClassificationReport",
    "EmdenFowlerSolver",
    "Envelope",
    "Expression",
    "GradedMesh",
    "ProblemError",
    "ProblemSpec",
    "SolutionGrid",
    "Status",
    "Verdict",
    "VerificationReport",
    "build_envelope",
    "build_mesh",
    "classify",
    "integrate",
    "parse",
    "solve",
    "solve_newton",
    "solve_picard",
    "solve_regularized",
    "validate_and_classify",
    "verify_solution",
]
