"""Continuous relaxation of a MixedModel by outer approximation.

Every quadratic term ``q (x - c)**2`` of an epigraph row is lifted into its
own variable ``t >= (x - c)**2``; the epigraph row itself becomes linear in
the ``t`` variables.  The univariate constraints are outer-approximated with
tangent cuts, which are globally valid, so the cut pool persists across
re-solves with different objectives or bounds.  At every iteration the LP
value is a valid bound on the relaxation optimum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..mixed import MixedModel, quad_parts
from ..model import DisjunctConstraint, DisjunctiveProblem, SeparableFunction
from .simplex import INFEASIBLE, OPTIMAL, SimplexEngine

log = logging.getLogger(__name__)

OA_TOL = 1e-6
MAX_CUTS_PER_TERM = 200


def sq_range(c: float, lo: float, hi: float) -> tuple[float, float]:
    """Range of ``(x - c)**2`` on ``[lo, hi]``."""
    m = min(max(c, lo), hi)
    return (m - c) ** 2, max((lo - c) ** 2, (hi - c) ** 2)


@dataclass
class RelaxResult:
    status: str
    x: np.ndarray
    objective: float
    bound: float
    converged: bool = True
    max_violation: float = 0.0
    oa_iterations: int = 0
    lp_iterations: int = 0
    history: list[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def warning(self) -> str | None:
        return None if self.converged else "outer-approximation cut budget exhausted"


class Relaxation:
    """Reusable LP/OA relaxation of a model; binaries are relaxed to [0, 1]."""

    def __init__(self, model: MixedModel, tol: float = OA_TOL, max_cuts_per_term: int = MAX_CUTS_PER_TERM,
                 initial_points: int = 5, purge_at: int | None = None):
        self.model = model
        self.tol = tol
        self.max_cuts = max_cuts_per_term
        nv = model.n_vars
        self.nv = nv
        lb = np.asarray(model.lb, float)
        ub = np.asarray(model.ub, float)
        # lifted square variables keyed by (var, center)
        self.sq_keys: list[tuple[int, float]] = []
        sq_index: dict[tuple[int, float], int] = {}
        epi_rows = []
        for e in model.epigraphs:
            quads, lin, const = quad_parts(e.f)
            coefs = dict(lin)
            for t in quads:
                key = (t.var, t.center)
                if key not in sq_index:
                    sq_index[key] = nv + len(self.sq_keys)
                    self.sq_keys.append(key)
                j = sq_index[key]
                coefs[j] = coefs.get(j, 0.0) + t.quad
            coefs[e.var] = coefs.get(e.var, 0.0) - 1.0
            epi_rows.append((coefs, -const))
        self.sq_index = sq_index
        n_tot = nv + len(self.sq_keys)
        t_lb = np.empty(len(self.sq_keys))
        t_ub = np.empty(len(self.sq_keys))
        for k, (v, c) in enumerate(self.sq_keys):
            t_lb[k], t_ub[k] = sq_range(c, lb[v], ub[v])
        A_lin, lo, hi = model.linear_arrays()
        A = np.zeros((A_lin.shape[0] + len(epi_rows), n_tot))
        A[: A_lin.shape[0], :nv] = A_lin
        for r, (coefs, rhs) in enumerate(epi_rows):
            for j, a in coefs.items():
                A[A_lin.shape[0] + r, j] += a
        lo = np.concatenate([lo, np.full(len(epi_rows), -np.inf)])
        hi = np.concatenate([hi, np.array([rhs for _, rhs in epi_rows])])
        self.sign = -1.0 if model.sense == "max" else 1.0
        self.constant = model.objective_constant
        c = np.zeros(n_tot)
        c[:nv] = self.sign * model.c()
        self.engine = SimplexEngine(A, lo, hi, np.concatenate([lb, t_lb]), np.concatenate([ub, t_ub]), c)
        self.cut_points: list[list[float]] = [[] for _ in self.sq_keys]
        self.n_base_rows = self.engine.m
        self.cut_meta: list[tuple[int, float]] = []
        self.purge_at = purge_at if purge_at is not None else 15 * max(1, len(self.sq_keys)) + 30
        self._add_initial_cuts(initial_points)

    # ------------------------------------------------------------ cuts

    def _cut_row(self, k: int, xh: float):
        v, c = self.sq_keys[k]
        row = np.zeros(self.engine.n)
        # t >= (xh-c)^2 + 2 (xh-c)(x-xh)  <=>  2(xh-c) x - t <= xh^2 - c^2
        row[v] = 2.0 * (xh - c)
        row[self.nv + k] = -1.0
        return row, xh * xh - c * c

    def _add_cuts(self, items: Sequence[tuple[int, float]]) -> int:
        rows, rhs = [], []
        for k, xh in items:
            pts = self.cut_points[k]
            if len(pts) >= self.max_cuts or any(abs(p - xh) <= 1e-12 * (1 + abs(xh)) for p in pts):
                continue
            pts.append(xh)
            self.cut_meta.append((k, xh))
            r, b = self._cut_row(k, xh)
            rows.append(r)
            rhs.append(b)
        if rows:
            self.engine.add_rows(np.array(rows), np.full(len(rows), -np.inf), np.array(rhs))
        return len(rows)

    def _add_initial_cuts(self, npts: int):
        items = []
        for k, (v, c) in enumerate(self.sq_keys):
            lo, hi = self.engine.lb[v], self.engine.ub[v]
            pts = set(np.linspace(lo, hi, max(npts, 2)).tolist())
            if lo < c < hi:
                pts.add(float(c))
            items.extend((k, float(p)) for p in sorted(pts))
        self._add_cuts(items)

    def purge_cuts(self, keep_points: bool = False) -> int:
        """Drop cuts that are slack at the current basis; returns the number removed."""
        eng = self.engine
        basic = set(int(b) for b in eng.basis)
        drop = []
        for r, (k, xh) in enumerate(self.cut_meta):
            row = self.n_base_rows + r
            col = eng.n + row
            if col in basic and eng.z[col] < eng.ub[col] - 1e-7 * (1 + abs(eng.ub[col])):
                drop.append(r)
        if not drop:
            return 0
        eng.remove_rows([self.n_base_rows + r for r in drop])
        gone = set(drop)
        for r in drop:
            k, xh = self.cut_meta[r]
            self.cut_points[k].remove(xh)
        self.cut_meta = [cm for r, cm in enumerate(self.cut_meta) if r not in gone]
        return len(drop)

    # ----------------------------------------------------------- solving

    def set_bounds(self, var: int, lo: float, hi: float):
        self.engine.set_bounds(var, lo, hi)

    def bounds(self, var: int) -> tuple[float, float]:
        return float(self.engine.lb[var]), float(self.engine.ub[var])

    def set_objective(self, c, sense: str | None = None, constant: float = 0.0):
        """Replace the objective (model-variable coefficients, constant) and optionally the sense."""
        self.constant = constant
        if sense is not None:
            self.sign = -1.0 if sense == "max" else 1.0
        full = np.zeros(self.engine.n)
        full[: self.nv] = self.sign * np.asarray(c, float)
        self.engine.set_objective(full)

    def epigraph_violation(self, y) -> float:
        return max((e.violation(y) for e in self.model.epigraphs), default=0.0)

    def solve(self, max_rounds: int = 10_000) -> RelaxResult:
        eng = self.engine
        if len(self.cut_meta) > self.purge_at:
            self.purge_cuts()
        history = []
        rounds = 0
        while True:
            lp = eng.solve()
            if lp.status != OPTIMAL:
                status = lp.status
                return RelaxResult(status, lp.x[: self.nv], np.nan, np.inf if status == INFEASIBLE else np.nan,
                                   status == INFEASIBLE, np.nan, rounds, eng.iterations, history)
            y = lp.x[: self.nv]
            val = self.sign * lp.objective + 0.0
            history.append(val)
            viol = self.epigraph_violation(y)
            if viol <= self.tol:
                return self._finish(lp, y, True, viol, rounds, history)
            items = []
            for k, (v, c) in enumerate(self.sq_keys):
                xh = float(lp.x[v])
                if (xh - c) ** 2 - lp.x[self.nv + k] > 1e-12 * (1 + abs(xh)) + 1e-13:
                    items.append((k, xh))
            added = self._add_cuts(items)
            rounds += 1
            if added == 0 or rounds >= max_rounds:
                log.warning("outer approximation stopped with violation %.3g", viol)
                return self._finish(lp, y, False, viol, rounds, history)

    def _finish(self, lp, y, converged, viol, rounds, history) -> RelaxResult:
        obj = self.constant + self.sign * lp.objective
        return RelaxResult(OPTIMAL, y.copy(), obj, obj, converged, viol, rounds, self.engine.iterations, history)


def solve_relaxation(m: MixedModel, **kw) -> RelaxResult:
    """Solve the continuous relaxation of ``m`` (binaries in [0, 1])."""
    return Relaxation(m, **kw).solve()


# ---------------------------------------------------------------------------
# convex subproblems over the problem domain (validation and OBBT)


def region_model(problem: DisjunctiveProblem, constraints: Sequence[DisjunctConstraint] = ()) -> MixedModel:
    """Model of ``{x in box, global rows} ∩ {constraints}`` with x as the first variables."""
    m = MixedModel(n_original=problem.n, formulation="region")
    for i in range(problem.n):
        m.add_var(problem.var_name(i), problem.lower[i], problem.upper[i])
    for r in problem.globals:
        m.add_row(dict(r.coefs), r.sense, r.rhs, r.name, "global")
    for k, con in enumerate(constraints):
        f = con.lhs
        if f.is_affine:
            m.add_row({t.var: t.lin for t in f.terms}, "<=", con.normalized_rhs, f"c{k}", "constraint")
        else:
            lo = f.constant + sum(_term_min(t, problem) for t in f.terms)
            v = m.add_var(f"v{k}", min(lo, con.rhs), con.rhs, role="aux")
            m.add_epigraph(f, v, name=f"c{k}")
    return m


def _term_min(t, problem) -> float:
    from ..bounds import term_range

    return term_range(t, problem.lower[t.var], problem.upper[t.var])[0]


def convex_feasible(problem: DisjunctiveProblem, constraints: Sequence[DisjunctConstraint], tol: float = 1e-7) -> bool:
    """True iff the box, global rows and the given convex constraints intersect."""
    for con in constraints:
        lo = con.lhs.constant + sum(_term_min(t, problem) for t in con.lhs.terms)
        if lo > con.rhs + tol:
            return False
    res = Relaxation(region_model(problem, constraints)).solve()
    return res.ok


def optimize_over_region(problem: DisjunctiveProblem, constraints: Sequence[DisjunctConstraint],
                         f: SeparableFunction, sense: str, relaxation: Relaxation | None = None) -> RelaxResult:
    """Optimize ``f`` over the region; ``f`` must be affine, or convex when minimizing."""
    if not f.is_affine and sense == "max":
        raise ValueError("maximizing a nonlinear convex function is not a convex problem")
    rel = relaxation or Relaxation(region_model(problem, constraints))
    nv = rel.nv
    if f.is_affine:
        c = np.zeros(nv)
        for t in f.terms:
            c[t.var] += t.lin
        rel.set_objective(c, sense, f.constant)
        return rel.solve()
    # convex min: epigraph variable appended to a fresh model
    m = region_model(problem, constraints)
    lo = f.constant + sum(_term_min(t, problem) for t in f.terms)
    hi = f.constant + sum(_term_max(t, problem) for t in f.terms)
    v = m.add_var("obj", lo, hi, role="aux")
    m.add_epigraph(f, v, name="objective")
    m.objective = {v: 1.0}
    return Relaxation(m).solve()


def _term_max(t, problem) -> float:
    from ..bounds import term_range

    return term_range(t, problem.lower[t.var], problem.upper[t.var])[1]
