"""Compile disjunctive problems into mixed-integer models."""

from .common import ReformulationError, UnsupportedFormulation
from .formulations import (
    FORMULATIONS,
    TwoTermCut,
    compile_bigm,
    compile_hull_linear,
    compile_problem,
    compile_psplit,
    compile_two_term,
    two_term_cuts,
)
from .linking import LinkingConstraint, generate_linking
from .projection import (
    Polyhedron,
    ProjectionTooLarge,
    containment_violation,
    fm_project,
    polyhedron_from_model,
    remove_redundant,
)

__all__ = [
    "FORMULATIONS", "LinkingConstraint", "Polyhedron", "ProjectionTooLarge", "ReformulationError",
    "TwoTermCut", "UnsupportedFormulation", "compile_bigm", "compile_hull_linear", "compile_problem",
    "compile_psplit", "compile_two_term", "containment_violation", "fm_project", "generate_linking",
    "polyhedron_from_model", "remove_redundant", "two_term_cuts",
]
