"""Bounds on split sums (the auxiliary alpha variables) and sharing detection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import Disjunction, DisjunctiveProblem, DisjunctConstraint, SeparableFunction, UnivariateTerm
from .partition import Partition

INTERVAL = "interval"
OBBT_UNION = "obbt-union"
LOCAL = "local"
USER = "user"

Key = tuple[int, int, int]  # (disjunct, constraint, split)


def term_range(t: UnivariateTerm, lo: float, hi: float) -> tuple[float, float]:
    """Exact (min, max) of ``q (x - c)**2 + a x`` on ``[lo, hi]``; any sign of q."""
    return quad_range(t.quad, t.center, t.lin, lo, hi)


def quad_range(q: float, c: float, a: float, lo: float, hi: float) -> tuple[float, float]:
    f = lambda x: q * (x - c) ** 2 + a * x  # noqa: E731
    vals = [f(lo), f(hi)]
    if q != 0.0:
        v = min(max(c - a / (2.0 * q), lo), hi)
        vals.append(f(v))
    return min(vals), max(vals)


def function_range(f: SeparableFunction, lower, upper) -> tuple[float, float]:
    """Box range of the terms of ``f`` (constant excluded)."""
    lo = hi = 0.0
    for t in f.terms:
        a, b = term_range(t, lower[t.var], upper[t.var])
        lo += a
        hi += b
    return lo, hi


def split_sums(d: Disjunction, p: Partition) -> dict[Key, SeparableFunction]:
    """Nonempty per-split restrictions of every disjunct constraint (constants dropped)."""
    out = {}
    for l, dj in enumerate(d.disjuncts):
        for k, con in enumerate(dj.constraints):
            for s, cls in enumerate(p.classes):
                f = con.lhs.restrict(cls)
                if f.terms:
                    out[(l, k, s)] = f
    return out


@dataclass
class BoundEntry:
    lower: float
    upper: float
    provenance: str = INTERVAL

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower {self.lower} > upper {self.upper}")

    def scaled(self, factor: float) -> "BoundEntry":
        a, b = self.lower * factor, self.upper * factor
        return BoundEntry(min(a, b), max(a, b), self.provenance)


@dataclass
class AlphaBounds:
    """Bounds per (disjunct, constraint, split) for one disjunction.

    ``regional`` holds optional bounds valid only while a given disjunct is
    active, keyed (disjunct, constraint, split, region disjunct).
    """

    entries: dict[Key, BoundEntry] = field(default_factory=dict)
    regional: dict[tuple[int, int, int, int], BoundEntry] = field(default_factory=dict)

    def __getitem__(self, key: Key) -> BoundEntry:
        return self.entries[key]

    def __contains__(self, key) -> bool:
        return key in self.entries

    def get(self, key: Key, region: int | None = None) -> BoundEntry:
        if region is not None and (*key, region) in self.regional:
            return self.regional[(*key, region)]
        return self.entries[key]

    def keys(self):
        return self.entries.keys()

    def hull(self, key: Key) -> BoundEntry:
        """Bounds valid whichever disjunct holds: the hull of all regional entries."""
        regions = [e for (l, k, s, _), e in self.regional.items() if (l, k, s) == key]
        if not regions:
            return self.entries[key]
        return BoundEntry(min(e.lower for e in regions), max(e.upper for e in regions), regions[0].provenance)


def alpha_bounds_interval(d: Disjunction, p: Partition, lower, upper) -> AlphaBounds:
    """Interval bounds: per-split sums of exact univariate term ranges over the box."""
    out = AlphaBounds()
    for key, f in split_sums(d, p).items():
        lo, hi = function_range(f, lower, upper)
        out.entries[key] = BoundEntry(lo, hi, INTERVAL)
    return out


def scaled_interval_bounds(d: Disjunction, p: Partition, lower, upper, factor: float) -> AlphaBounds:
    """Interval bounds widened around zero by ``factor`` (weak-bound experiments)."""
    out = alpha_bounds_interval(d, p, lower, upper)
    for key, e in out.entries.items():
        out.entries[key] = BoundEntry(e.lower * factor if e.lower < 0 else e.lower,
                                      e.upper * factor if e.upper > 0 else e.upper, USER)
    return out


# ---------------------------------------------------------------------------
# optimization-based bounds


def _uni_max(q: float, lin: float, const: float, lo: float, hi: float) -> float:
    """Max of q x^2 + lin x + const on [lo, hi] (any sign of q)."""
    vals = [q * lo * lo + lin * lo, q * hi * hi + lin * hi]
    if q < 0:
        v = min(max(-lin / (2 * q), lo), hi)
        vals.append(q * v * v + lin * v)
    return max(vals) + const


def _expanded(f: SeparableFunction) -> dict[int, tuple[float, float]]:
    out: dict[int, list[float]] = {}
    for t in f.terms:
        q2, q1, _ = t.expanded()
        slot = out.setdefault(t.var, [0.0, 0.0])
        slot[0] += q2
        slot[1] += q1
    return {v: (a, b) for v, (a, b) in out.items()}


def _const(f: SeparableFunction) -> float:
    return f.constant + sum(t.expanded()[2] for t in f.terms)


def lagrangian_max(S: SeparableFunction, con: DisjunctConstraint, lower, upper, iters: int = 200) -> float:
    """Upper bound on ``max S`` over ``{box, con}`` from the one-multiplier dual.

    Exact when ``S`` is affine (or concave) and the constraint is convex with
    a Slater point; a valid bound otherwise.
    """
    s = _expanded(S)
    g = _expanded(con.lhs)
    b = con.rhs - _const(con.lhs)
    s0 = _const(S)
    variables = sorted(set(s) | set(g))

    def phi(mu: float) -> float:
        total = s0 + mu * b
        for v in variables:
            sq, sl = s.get(v, (0.0, 0.0))
            gq, gl = g.get(v, (0.0, 0.0))
            total += _uni_max(sq - mu * gq, sl - mu * gl, 0.0, lower[v], upper[v])
        return total

    hi = 1.0
    f_hi = phi(hi)
    while phi(2 * hi) < f_hi and hi < 1e12:
        hi *= 2
        f_hi = phi(hi)
    hi *= 2
    lo = 0.0
    invphi = (math.sqrt(5) - 1) / 2
    a, bb = lo, hi
    c = bb - invphi * (bb - a)
    dd = a + invphi * (bb - a)
    fc, fd = phi(c), phi(dd)
    for _ in range(iters):
        if fc <= fd:
            bb, dd, fd = dd, c, fc
            c = bb - invphi * (bb - a)
            fc = phi(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + invphi * (bb - a)
            fd = phi(dd)
        if bb - a <= 1e-15 * (1 + bb):
            break
    return min(fc, fd, phi(0.0), phi(a), phi(bb))


def _secant_over(S: SeparableFunction, lower, upper) -> SeparableFunction:
    """Affine overestimator of a convex separable function on the box."""
    terms, const = [], S.constant
    for t in S.terms:
        lo, hi = lower[t.var], upper[t.var]
        if t.quad == 0.0 or hi <= lo:
            if t.quad == 0.0:
                terms.append(t)
            else:
                const += t(lo)
            continue
        slope = (t(hi) - t(lo)) / (hi - lo)
        terms.append(UnivariateTerm(t.var, 0.0, 0.0, slope))
        const += t(lo) - slope * lo
    return SeparableFunction.build(terms, const)


def region_extreme(problem: DisjunctiveProblem, constraints: Sequence[DisjunctConstraint],
                   S: SeparableFunction, sense: str) -> float:
    """Best provable bound on min/max of ``S`` over box ∩ global rows ∩ constraints.

    min returns a valid lower bound, max a valid upper bound.  Convex cases
    (affine S, or convex S minimized) are exact up to solver tolerance.
    """
    from .solver.relax import optimize_over_region

    lower, upper = problem.lower, problem.upper
    box_lo, box_hi = function_range(S, lower, upper)
    box_lo += S.constant
    box_hi += S.constant
    nonaffine_region = [c for c in constraints if not c.lhs.is_affine]
    if sense == "max":
        candidates = [box_hi]
        if S.is_affine:
            res = optimize_over_region(problem, constraints, S, "max")
            if res.status == "infeasible":
                return -math.inf
            candidates.append(res.objective)
        else:
            res = optimize_over_region(problem, constraints, _secant_over(S, lower, upper), "max")
            if res.status == "infeasible":
                return -math.inf
            candidates.append(res.objective)
        if len(constraints) == 1 and nonaffine_region:
            candidates.append(lagrangian_max(S, constraints[0], lower, upper))
        elif len(constraints) == 1 and not S.is_affine and not problem.globals:
            candidates.append(lagrangian_max(S, constraints[0], lower, upper))
        return min(candidates)
    # min S = -max(-S); convex S gives a concave -S and strong duality
    candidates = [box_lo]
    res = optimize_over_region(problem, constraints, S, "min")
    if res.status == "infeasible":
        return math.inf
    candidates.append(res.objective)
    if len(constraints) == 1 and nonaffine_region:
        candidates.append(-lagrangian_max(S.scaled(-1.0), constraints[0], lower, upper))
    return max(candidates)


class InfeasibleDisjunctError(ValueError):
    pass


def alpha_bounds_obbt(problem: DisjunctiveProblem, d: Disjunction, p: Partition, mode: str = "union") -> AlphaBounds:
    """Optimization-based bounds on every split sum.

    ``mode="local"``: each (l, k, s) entry is valid while disjunct l holds,
    and bounds valid inside every other disjunct are kept in ``regional``.
    ``mode="union"``: the elementwise hull over all disjuncts, valid on the
    whole disjunction.
    """
    if mode not in ("union", "local"):
        raise ValueError(f"unknown OBBT mode {mode!r}")
    sums = split_sums(d, p)
    per_region: dict[tuple[int, int, int, int], BoundEntry] = {}
    for r, dj in enumerate(d.disjuncts):
        from .solver.relax import convex_feasible

        if not convex_feasible(problem, dj.constraints):
            raise InfeasibleDisjunctError(f"disjunct {r} is infeasible over the domain")
        for key, S in sums.items():
            lo = region_extreme(problem, dj.constraints, S, "min")
            hi = region_extreme(problem, dj.constraints, S, "max")
            box_lo, box_hi = function_range(S, problem.lower, problem.upper)
            lo, hi = max(lo, box_lo), min(hi, box_hi)
            if lo > hi:
                lo = hi = 0.5 * (lo + hi)
            per_region[(*key, r)] = BoundEntry(lo, hi, LOCAL)
    out = AlphaBounds()
    nd = len(d.disjuncts)
    for key in sums:
        if mode == "local":
            e = per_region[(*key, key[0])]
            out.entries[key] = BoundEntry(e.lower, e.upper, LOCAL)
            for r in range(nd):
                out.regional[(*key, r)] = per_region[(*key, r)]
        else:
            lo = min(per_region[(*key, r)].lower for r in range(nd))
            hi = max(per_region[(*key, r)].upper for r in range(nd))
            out.entries[key] = BoundEntry(lo, hi, OBBT_UNION)
    return out


# ---------------------------------------------------------------------------
# independence and sharing


def independence_check(d: Disjunction, p: Partition, problem: DisjunctiveProblem,
                       tol: float = 1e-8) -> dict[tuple[int, int, int, int], bool]:
    """Check additivity of split-sum optima over the domain for every split pair.

    Keys are (disjunct, constraint, s1, s2) with s1 < s2.  Without global rows
    the domain is a box and the answer is computed in closed form.
    """
    sums = split_sums(d, p)
    out = {}

    def extremes(f: SeparableFunction):
        if not problem.globals:
            return function_range(f, problem.lower, problem.upper)
        return region_extreme(problem, (), f, "min"), region_extreme(problem, (), f, "max")

    cache = {key: extremes(f) for key, f in sums.items()}
    for l, dj in enumerate(d.disjuncts):
        for k in range(len(dj.constraints)):
            splits = sorted(s for (ll, kk, s) in sums if ll == l and kk == k)
            for i, s1 in enumerate(splits):
                for s2 in splits[i + 1:]:
                    lo1, hi1 = cache[(l, k, s1)]
                    lo2, hi2 = cache[(l, k, s2)]
                    lo, hi = extremes(sums[(l, k, s1)] + sums[(l, k, s2)])
                    ok = abs(lo - (lo1 + lo2)) <= tol * (1 + abs(lo)) and abs(hi - (hi1 + hi2)) <= tol * (1 + abs(hi))
                    out[(l, k, s1, s2)] = ok
    return out


def _signature(f: SeparableFunction):
    return tuple((t.var, t.quad, t.center, t.lin) for t in f.terms)


def proportional(f: SeparableFunction, g: SeparableFunction, rel: float = 1e-12,
                 signed: bool = False) -> float | None:
    """Factor ``s`` with ``g == s * f`` termwise (constants ignored), else None.

    Only positive factors count unless ``signed``, which also admits negative
    factors between affine sums.
    """
    a, b = _signature(f), _signature(g)
    if len(a) != len(b) or any(x[0] != y[0] for x, y in zip(a, b)):
        return None
    scale = None
    for (_, q1, c1, l1), (_, q2, c2, l2) in zip(a, b):
        if (q1 == 0) != (q2 == 0) or (l1 == 0) != (l2 == 0):
            return None
        if q1 and abs(c1 - c2) > rel * (1 + abs(c1)):
            return None
        for u, v in ((q1, q2), (l1, l2)):
            if u == 0:
                continue
            r = v / u
            if scale is None:
                scale = r
            elif abs(r - scale) > rel * abs(scale):
                return None
    if scale is None or scale == 0:
        return None
    if scale < 0 and not (signed and f.is_affine and g.is_affine):
        return None
    return scale


@dataclass(frozen=True)
class ShareGroup:
    rep: Key
    members: tuple[tuple[Key, float], ...]  # (key, scale) with key sum = scale * rep sum


def detect_shared_alphas(d: Disjunction, p: Partition, signed: bool = False) -> list[ShareGroup]:
    """Group split sums equal up to a positive factor; representative = lowest key.

    With ``signed`` affine sums that differ by a negative factor are grouped
    too; their split rows are equalities, so the sign flip is exact.
    """
    sums = split_sums(d, p)
    groups: list[list[tuple[Key, float]]] = []
    for key in sorted(sums):
        f = sums[key]
        for grp in groups:
            rep = grp[0][0]
            if rep[2] != key[2]:
                continue
            s = proportional(sums[rep], f, signed=signed)
            if s is not None:
                grp.append((key, s))
                break
        else:
            groups.append([(key, 1.0)])
    return [ShareGroup(g[0][0], tuple(g)) for g in groups]


# ---------------------------------------------------------------------------
# CSV exchange

CSV_COLUMNS = ["disjunction", "disjunct", "constraint", "split", "lower", "upper", "provenance", "region"]


def write_bounds_csv(bounds: Sequence[AlphaBounds], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for j, ab in enumerate(bounds):
            for (l, k, s), e in sorted(ab.entries.items()):
                w.writerow([j, l, k, s, repr(e.lower), repr(e.upper), e.provenance, ""])
            for (l, k, s, r), e in sorted(ab.regional.items()):
                w.writerow([j, l, k, s, repr(e.lower), repr(e.upper), e.provenance, r])


def read_bounds_csv(path, n_disjunctions: int | None = None) -> list[AlphaBounds]:
    out: dict[int, AlphaBounds] = {}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        missing = {"disjunct", "constraint", "split", "lower", "upper"} - set(rd.fieldnames or [])
        if missing:
            raise ValueError(f"bounds CSV lacks columns {sorted(missing)}")
        for line, row in enumerate(rd, start=2):
            try:
                j = int(row.get("disjunction") or 0)
                key = (int(row["disjunct"]), int(row["constraint"]), int(row["split"]))
                e = BoundEntry(float(row["lower"]), float(row["upper"]), row.get("provenance") or USER)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line}: {exc}") from exc
            ab = out.setdefault(j, AlphaBounds())
            region = (row.get("region") or "").strip()
            if region:
                ab.regional[(*key, int(region))] = e
            else:
                ab.entries[key] = e
    count = n_disjunctions if n_disjunctions is not None else (max(out) + 1 if out else 0)
    return [out.get(j, AlphaBounds()) for j in range(count)]


def compute_bounds(problem: DisjunctiveProblem, partitions: Sequence[Partition], mode: str = INTERVAL) -> list[AlphaBounds]:
    """Bounds for every disjunction under ``mode`` in {interval, obbt-union, obbt-local}."""
    out = []
    for d, p in zip(problem.disjunctions, partitions):
        if mode == INTERVAL:
            out.append(alpha_bounds_interval(d, p, problem.lower, problem.upper))
        elif mode == OBBT_UNION:
            out.append(alpha_bounds_obbt(problem, d, p, "union"))
        elif mode in ("obbt-local", LOCAL):
            out.append(alpha_bounds_obbt(problem, d, p, "local"))
        else:
            raise ValueError(f"unknown bound mode {mode!r}")
    return out
