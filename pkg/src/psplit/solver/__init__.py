"""LP engine, outer-approximation relaxation and branch and bound."""

from .bnb import EnumerationResult, MipResult, enumerate_assignments, solve_bnb
from .relax import Relaxation, RelaxResult, solve_relaxation
from .simplex import LpResult, SimplexEngine, solve_lp

__all__ = [
    "EnumerationResult", "LpResult", "MipResult", "RelaxResult", "Relaxation", "SimplexEngine",
    "enumerate_assignments", "solve_bnb", "solve_lp", "solve_relaxation",
]
