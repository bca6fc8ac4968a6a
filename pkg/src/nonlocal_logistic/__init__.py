"""Numerical toolkit for a nonlocal logistic elliptic system with nonlinear advection."""

from .errors import (
    ConfigurationError,
    DomainError,
    HypothesisViolation,
    NonlocalLogisticError,
    PositivityError,
    SolverError,
)
from .geometry import Grid, VectorFieldSpec, build_grid
from .nonlocal_terms import KernelSpec, ReactionSpec
from .spectral import CouplingMatrix
from .system import LINEAR, POWER, ProblemSpec, State

__version__ = "0.1.0"
