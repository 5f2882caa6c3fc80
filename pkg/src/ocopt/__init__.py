"""Unconstrained minimization by solving a discrete-time optimal control problem."""

__version__ = "0.1.0"

from .objective import Objective, ReferenceCase, registry_get  # noqa: E402
from .ocsolver import SolveReport, SolverConfig, Trajectory, solve, verify_pmp  # noqa: E402

__all__ = [
    "Objective",
    "ReferenceCase",
    "registry_get",
    "SolveReport",
    "SolverConfig",
    "Trajectory",
    "solve",
    "verify_pmp",
]
