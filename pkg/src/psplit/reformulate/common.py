"""Shared helpers for building compiled models from a disjunctive problem."""

from __future__ import annotations

from typing import Sequence

from ..bounds import AlphaBounds, alpha_bounds_interval
from ..mixed import MixedModel
from ..model import DisjunctiveProblem, ModelError, validate
from ..partition import Partition, partition_uniform


class ReformulationError(ValueError):
    pass


class UnsupportedFormulation(ReformulationError):
    pass


def base_model(problem: DisjunctiveProblem, formulation: str) -> MixedModel:
    """Model holding the original variables, global rows and the objective."""
    rep = validate(problem, check_feasibility=False)
    if rep.errors:
        raise ModelError("; ".join(rep.errors))
    m = MixedModel(n_original=problem.n, formulation=formulation, sense=problem.sense,
                   objective_constant=problem.objective_constant)
    for i in range(problem.n):
        m.add_var(problem.var_name(i), problem.lower[i], problem.upper[i])
    for r in problem.globals:
        m.add_row(dict(r.coefs), r.sense, r.rhs, r.name, "global")
    m.objective = {i: float(a) for i, a in enumerate(problem.objective) if a != 0.0}
    return m


def add_indicators(m: MixedModel, problem: DisjunctiveProblem) -> None:
    """Binary per disjunct, one-of rows per disjunction and the logic rows."""
    for j, d in enumerate(problem.disjunctions):
        lams = [m.add_var(f"lam_{j}_{l}", 0.0, 1.0, role="lambda", binary=True) for l in range(len(d.disjuncts))]
        m.lambdas.append(lams)
        m.add_row({v: 1.0 for v in lams}, "=", 1.0, f"one_of_{j}", "choice")
    for r in problem.logic:
        coefs: dict[int, float] = {}
        for j, l, a in r.terms:
            v = m.lambdas[j][l]
            coefs[v] = coefs.get(v, 0.0) + a
        m.add_row(coefs, r.sense, r.rhs, r.name or f"logic{len(m.rows)}", "logic")


def as_bound_list(problem: DisjunctiveProblem, bounds, partitions: Sequence[Partition]) -> list[AlphaBounds]:
    """Normalize ``bounds`` (None, one AlphaBounds or a list) to one entry per disjunction."""
    if bounds is None:
        return [alpha_bounds_interval(d, p, problem.lower, problem.upper)
                for d, p in zip(problem.disjunctions, partitions)]
    if isinstance(bounds, AlphaBounds):
        bounds = [bounds]
    bounds = list(bounds)
    if len(bounds) != len(problem.disjunctions):
        raise ReformulationError(f"got bounds for {len(bounds)} disjunctions, problem has {len(problem.disjunctions)}")
    return bounds


def single_split(problem: DisjunctiveProblem) -> list[Partition]:
    return [partition_uniform(d.support, 1) for d in problem.disjunctions]


def entry(ab: AlphaBounds, j: int, key, region: int | None = None, hull: bool = False):
    try:
        return ab.hull(key) if hull else ab.get(key, region)
    except KeyError:
        raise ReformulationError(f"missing bound entry for disjunction {j}, (disjunct, constraint, split) = {key}") from None
