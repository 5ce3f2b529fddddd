"""Best-bound branch and bound over the disjunct indicator binaries."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..mixed import MixedModel
from ..model import DisjunctiveProblem
from .relax import OA_TOL, Relaxation, region_model
from .simplex import INFEASIBLE

log = logging.getLogger(__name__)

INT_TOL = 1e-6
GAP = 1e-6

OPTIMAL = "optimal"
NODE_LIMIT = "node_limit"
TIME_LIMIT = "time_limit"
LIMIT_STATUSES = (NODE_LIMIT, TIME_LIMIT)


@dataclass
class MipResult:
    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int
    wall_time: float
    n_original: int = 0
    relax_value: float = math.nan
    history: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if self.x is None or not math.isfinite(self.bound):
            return math.inf
        return abs(self.objective - self.bound) / max(1.0, abs(self.objective))

    @property
    def x_original(self) -> np.ndarray | None:
        return None if self.x is None else self.x[: self.n_original]


def _most_fractional(y, binaries) -> int | None:
    best, best_frac = None, INT_TOL
    for b in binaries:
        frac = min(y[b] - math.floor(y[b]), math.ceil(y[b]) - y[b])
        if frac > best_frac + 1e-12:
            best, best_frac = b, frac
    return best


def solve_bnb(m: MixedModel, time_limit: float | None = None, node_limit: int | None = None,
              gap: float = GAP, oa_tol: float = OA_TOL) -> MipResult:
    """Solve ``m`` to optimality (relative gap ``gap``) or until a limit is hit.

    Nodes are processed in best-bound order (ties: creation order); the most
    fractional binary is branched on, ties going to the lowest index.  One
    relaxation engine is shared by all nodes, with warm-started re-solves.
    """
    t0 = time.perf_counter()
    rel = Relaxation(m, tol=oa_tol)
    sign = -1.0 if m.sense == "max" else 1.0
    binaries = sorted(m.binaries)
    base = {b: (m.lb[b], m.ub[b]) for b in binaries}
    counter = itertools.count()
    heap = [(-math.inf, next(counter), {})]
    incumbent, inc_val = None, math.inf  # internal values are minimized
    nodes = 0
    status = OPTIMAL
    root_value = math.nan
    history = []

    def timed_out() -> bool:
        return time_limit is not None and time.perf_counter() - t0 > time_limit

    while heap:
        bound, _, fixed = heap[0]
        if incumbent is not None and bound >= inc_val - gap * max(1.0, abs(inc_val)):
            break
        if node_limit is not None and nodes >= node_limit:
            status = NODE_LIMIT
            break
        if timed_out():
            status = TIME_LIMIT
            break
        heapq.heappop(heap)
        for b in binaries:
            lo, hi = fixed.get(b, base[b])
            rel.set_bounds(b, lo, hi)
        res = rel.solve()
        nodes += 1
        if res.status == INFEASIBLE:
            continue
        if not res.ok:
            log.warning("node relaxation ended with status %s; node pruned", res.status)
            continue
        val = sign * res.objective
        if nodes == 1:
            root_value = res.objective
        if incumbent is not None and val >= inc_val - gap * max(1.0, abs(inc_val)):
            continue
        b = _most_fractional(res.x, binaries)
        if b is None:
            y = res.x.copy()
            for v in binaries:
                y[v] = round(y[v])
            incumbent, inc_val = y, val
            history.append((nodes, res.objective))
            continue
        for side in (0.0, 1.0):
            child = dict(fixed)
            child[b] = (side, side)
            heapq.heappush(heap, (max(val, bound), next(counter), child))
    wall = time.perf_counter() - t0
    if incumbent is None and status == OPTIMAL:
        return MipResult(INFEASIBLE, None, math.nan, math.inf * sign, nodes, wall, m.n_original, root_value, history)
    open_bound = min((h[0] for h in heap), default=math.inf)
    best = min(open_bound, inc_val) if status != OPTIMAL else inc_val
    if status == OPTIMAL and heap:
        best = min(inc_val, open_bound)
    obj = sign * inc_val if incumbent is not None else math.nan
    return MipResult(status, incumbent, obj, sign * best, nodes, wall, m.n_original, root_value, history)


# ---------------------------------------------------------------------------
# exhaustive reference


@dataclass
class EnumerationResult:
    objective: float
    x: np.ndarray | None
    pattern: tuple[int, ...] | None
    n_patterns: int


def _logic_ok(problem: DisjunctiveProblem, pattern) -> bool:
    for r in problem.logic:
        act = sum(a for j, l, a in r.terms if pattern[j] == l)
        if r.sense == "<=" and act > r.rhs + 1e-9:
            return False
        if r.sense == ">=" and act < r.rhs - 1e-9:
            return False
        if r.sense == "=" and abs(act - r.rhs) > 1e-9:
            return False
    return True


def enumerate_assignments(problem: DisjunctiveProblem, oa_tol: float = OA_TOL, limit: int = 100_000) -> EnumerationResult:
    """Optimum by solving one convex problem per disjunct choice pattern."""
    sizes = [len(d.disjuncts) for d in problem.disjunctions]
    total = math.prod(sizes)
    if total > limit:
        raise ValueError(f"{total} patterns exceed the enumeration limit {limit}")
    sign = -1.0 if problem.sense == "max" else 1.0
    best = EnumerationResult(math.nan, None, None, 0)
    best_val = math.inf
    for pattern in itertools.product(*(range(s) for s in sizes)):
        if not _logic_ok(problem, pattern):
            continue
        best.n_patterns += 1
        cons = [c for d, l in zip(problem.disjunctions, pattern) for c in d.disjuncts[l].constraints]
        m = region_model(problem, cons)
        m.objective = {i: float(a) for i, a in enumerate(problem.objective) if a}
        m.sense = problem.sense
        m.objective_constant = problem.objective_constant
        res = Relaxation(m, tol=oa_tol).solve()
        if not res.ok:
            continue
        if sign * res.objective < best_val:
            best_val = sign * res.objective
            best.objective, best.x, best.pattern = res.objective, res.x[: problem.n].copy(), pattern
    return best
