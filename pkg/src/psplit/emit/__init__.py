"""Model files, projection grids and report figures."""

from .grid import (
    DEFAULT_RESOLUTION,
    FeasibilityGrid,
    grid_svg,
    point_grid,
    project_2d,
    project_disjunction,
    read_grid_csv,
    render_grid,
    write_grid_csv,
)
from .lpfile import LpParseError, model_to_lp, parse_lp, read_lp, same_model, write_lp
from .mps import UnsupportedModel, model_to_mps, parse_mps, read_mps, write_mps

__all__ = [
    "DEFAULT_RESOLUTION", "FeasibilityGrid", "LpParseError", "UnsupportedModel", "grid_svg", "model_to_lp",
    "model_to_mps", "parse_lp", "parse_mps", "point_grid", "project_2d", "project_disjunction", "read_grid_csv",
    "read_lp", "read_mps", "render_grid", "same_model", "write_grid_csv", "write_lp", "write_mps",
]
