"""2-D feasibility grids of relaxed and exact feasible sets, rendered as SVG and CSV."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..mixed import MixedModel
from ..model import DisjunctiveProblem, disjunction_satisfied
from ..solver.relax import Relaxation, region_model
from .lpfile import fmt

DEFAULT_RESOLUTION = 101


@dataclass
class FeasibilityGrid:
    """Flags of cell centers; ``flags[b, a]`` is the cell at column ``a`` (axis i) and row ``b`` (axis j)."""

    axes: tuple[int, int]
    names: tuple[str, str]
    ranges: tuple[tuple[float, float], tuple[float, float]]
    resolution: int
    flags: np.ndarray
    label: str = ""

    @property
    def centers_i(self) -> np.ndarray:
        return _centers(*self.ranges[0], self.resolution)

    @property
    def centers_j(self) -> np.ndarray:
        return _centers(*self.ranges[1], self.resolution)

    @property
    def count(self) -> int:
        return int(self.flags.sum())

    def subset_of(self, other: "FeasibilityGrid") -> bool:
        return bool(np.all(~self.flags | other.flags))

    def cell_of(self, xi: float, xj: float) -> tuple[int, int]:
        """(row, column) of the cell containing the point."""
        (li, ui), (lj, uj) = self.ranges
        a = min(int((xi - li) / (ui - li) * self.resolution), self.resolution - 1)
        b = min(int((xj - lj) / (uj - lj) * self.resolution), self.resolution - 1)
        return b, a

    def flag_at(self, xi: float, xj: float) -> bool:
        return bool(self.flags[self.cell_of(xi, xj)])


def _centers(lo: float, hi: float, res: int) -> np.ndarray:
    return lo + (np.arange(res) + 0.5) * (hi - lo) / res


def _axis(names: Sequence[str], ax) -> int:
    return names.index(ax) if isinstance(ax, str) else int(ax)


def _scan(rel: Relaxation, i: int, j: int, ci: np.ndarray, cj: np.ndarray, tol: float) -> np.ndarray:
    """Row-interval scan of a convex set: fix axis j, minimize and maximize axis i."""
    flags = np.zeros((cj.size, ci.size), bool)
    lo_j, hi_j = rel.bounds(j)
    c = np.zeros(rel.nv)
    c[i] = 1.0
    for b, v in enumerate(cj):
        if v < lo_j - tol or v > hi_j + tol:
            continue
        rel.set_bounds(j, v, v)
        rel.set_objective(c, "min")
        r = rel.solve()
        if not r.ok:
            continue
        lo = r.objective
        rel.set_objective(c, "max")
        r = rel.solve()
        if not r.ok:
            continue
        flags[b] = (ci >= lo - tol) & (ci <= r.objective + tol)
    rel.set_bounds(j, lo_j, hi_j)
    return flags


def _cells(rel: Relaxation, i: int, j: int, ci: np.ndarray, cj: np.ndarray) -> np.ndarray:
    """One feasibility solve per cell center."""
    flags = np.zeros((cj.size, ci.size), bool)
    saved = rel.bounds(i), rel.bounds(j)
    rel.set_objective(np.zeros(rel.nv), "min")
    for b, vj in enumerate(cj):
        for a, vi in enumerate(ci):
            if not (saved[0][0] <= vi <= saved[0][1] and saved[1][0] <= vj <= saved[1][1]):
                continue
            rel.set_bounds(i, vi, vi)
            rel.set_bounds(j, vj, vj)
            flags[b, a] = rel.solve().ok
    rel.set_bounds(i, *saved[0])
    rel.set_bounds(j, *saved[1])
    return flags


def project_2d(m: MixedModel, i, j, resolution: int = DEFAULT_RESOLUTION, ranges=None,
               method: str = "scan", label: str = "") -> FeasibilityGrid:
    """Project the continuous relaxation of ``m`` onto two variables.

    ``method="scan"`` exploits convexity of the relaxed set: for every row
    it fixes axis j and flags the cells whose center lies between the min
    and max of axis i.  ``method="cell"`` tests every cell center with a
    feasibility solve.  Both flag the same cells up to solver tolerance.
    """
    i, j = _axis(m.names, i), _axis(m.names, j)
    if i == j:
        raise ValueError("projection axes must differ")
    if ranges is None:
        ranges = ((m.lb[i], m.ub[i]), (m.lb[j], m.ub[j]))
    ci, cj = _centers(*ranges[0], resolution), _centers(*ranges[1], resolution)
    rel = Relaxation(m)
    tol = 1e-7 * (1 + ranges[0][1] - ranges[0][0])
    if method == "scan":
        flags = _scan(rel, i, j, ci, cj, tol)
    elif method == "cell":
        flags = _cells(rel, i, j, ci, cj)
    else:
        raise ValueError(f"unknown projection method {method!r}")
    return FeasibilityGrid((i, j), (m.names[i], m.names[j]), tuple(map(tuple, ranges)), resolution, flags,
                           label or m.formulation)


def project_disjunction(problem: DisjunctiveProblem, i: int, j: int, resolution: int = DEFAULT_RESOLUTION,
                        ranges=None, label: str = "disjunction") -> FeasibilityGrid:
    """Exact projection of the disjunctive feasible set: union over disjunct choices."""
    if ranges is None:
        ranges = ((problem.lower[i], problem.upper[i]), (problem.lower[j], problem.upper[j]))
    ci, cj = _centers(*ranges[0], resolution), _centers(*ranges[1], resolution)
    flags = np.zeros((resolution, resolution), bool)
    tol = 1e-7 * (1 + ranges[0][1] - ranges[0][0])
    from ..solver.bnb import _logic_ok

    for pattern in itertools.product(*(range(len(d.disjuncts)) for d in problem.disjunctions)):
        if not _logic_ok(problem, pattern):
            continue
        cons = [c for d, l in zip(problem.disjunctions, pattern) for c in d.disjuncts[l].constraints]
        rel = Relaxation(region_model(problem, cons))
        flags |= _scan(rel, i, j, ci, cj, tol)
    names = (problem.var_name(i), problem.var_name(j))
    return FeasibilityGrid((i, j), names, tuple(map(tuple, ranges)), resolution, flags, label)


def point_grid(problem: DisjunctiveProblem, i: int, j: int, fixed: Sequence[float],
               resolution: int = DEFAULT_RESOLUTION, ranges=None, tol: float = 1e-9) -> FeasibilityGrid:
    """Disjunction test at cell centers with every other variable held at ``fixed``."""
    if ranges is None:
        ranges = ((problem.lower[i], problem.upper[i]), (problem.lower[j], problem.upper[j]))
    ci, cj = _centers(*ranges[0], resolution), _centers(*ranges[1], resolution)
    x = np.asarray(fixed, float).copy()
    flags = np.zeros((resolution, resolution), bool)
    for b, vj in enumerate(cj):
        for a, vi in enumerate(ci):
            x[i], x[j] = vi, vj
            flags[b, a] = all(disjunction_satisfied(d, x, tol) for d in problem.disjunctions)
    names = (problem.var_name(i), problem.var_name(j))
    return FeasibilityGrid((i, j), names, tuple(map(tuple, ranges)), resolution, flags, "points")


# ---------------------------------------------------------------------------
# rendering

CELL_PX = 4
FEASIBLE = "#3b3b3b"
INFEASIBLE = "#f2f2f2"


def grid_svg(g: FeasibilityGrid) -> str:
    res = g.resolution
    size = res * CELL_PX
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<title>{g.label} {g.names[0]}-{g.names[1]}</title>",
    ]
    for b in range(res):
        y = (res - 1 - b) * CELL_PX  # axis j points up
        row = g.flags[b]
        a = 0
        while a < res:
            end = a
            while end + 1 < res and row[end + 1] == row[a]:
                end += 1
            color = FEASIBLE if row[a] else INFEASIBLE
            out.append(f'<rect x="{a * CELL_PX}" y="{y}" width="{(end - a + 1) * CELL_PX}" '
                       f'height="{CELL_PX}" fill="{color}"/>')
            a = end + 1
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_grid_csv(g: FeasibilityGrid, path) -> None:
    ci, cj = g.centers_i, g.centers_j
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_i", "x_j", "flag"])
        for b in range(g.resolution):
            for a in range(g.resolution):
                w.writerow([fmt(ci[a]), fmt(cj[b]), int(g.flags[b, a])])


def read_grid_csv(path) -> list[tuple[float, float, int]]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        return [(float(a), float(b), int(c)) for a, b, c in rd]


def render_grid(g: FeasibilityGrid, path, csv_path=None) -> tuple[Path, Path]:
    """Write the SVG heat map and its CSV twin (``x_i,x_j,flag`` per cell)."""
    svg = Path(path)
    twin = Path(csv_path) if csv_path is not None else svg.with_suffix(".csv")
    svg.write_text(grid_svg(g))
    write_grid_csv(g, twin)
    return svg, twin
