"""Jacobi-type optimization on the unitary group for joint diagonalization."""
from .cost import CostFunction, RotatedState, SquaredTerm, evaluate, rotate_full
from .rotations import GammaMatrix, GivensRotation, build_gamma, leading_eigvec3
from .solver import SolveResult, SolverConfig, Status, solve

__version__ = "0.1.0"

__all__ = [
    "CostFunction",
    "RotatedState",
    "SquaredTerm",
    "evaluate",
    "rotate_full",
    "GammaMatrix",
    "GivensRotation",
    "build_gamma",
    "leading_eigvec3",
    "SolveResult",
    "SolverConfig",
    "Status",
    "solve",
]
