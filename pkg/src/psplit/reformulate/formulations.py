"""Big-M, P-split, extended hull and two-term cut formulations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from ..bounds import AlphaBounds, BoundEntry, ShareGroup, detect_shared_alphas, function_range, split_sums
from ..mixed import MixedModel
from ..model import Disjunct, Disjunction, DisjunctiveProblem, SeparableFunction
from ..partition import Partition, resolve_partitions
from .common import (
    ReformulationError,
    UnsupportedFormulation,
    add_indicators,
    as_bound_list,
    base_model,
    entry,
    single_split,
)

FORMULATIONS = ("bigm", "psplit", "hull", "2term-cuts")


def _terms_only(f: SeparableFunction) -> SeparableFunction:
    return SeparableFunction(f.terms, 0.0)


def _coefs(f: SeparableFunction) -> dict[int, float]:
    return {t.var: t.lin for t in f.terms}


# ---------------------------------------------------------------------------
# big-M


def compile_bigm(problem: DisjunctiveProblem, bounds=None) -> MixedModel:
    """Rows ``g(x) <= b + M (1 - lam)`` with the smallest valid ``M = upper - b``.

    ``bounds`` are single-split bounds (key split 0); interval bounds are used
    when omitted.  Quadratic rows go through an epigraph variable ``g_j_l_k``.
    """
    m = base_model(problem, "bigm")
    add_indicators(m, problem)
    bl = as_bound_list(problem, bounds, single_split(problem))
    big_m = {}
    for j, d in enumerate(problem.disjunctions):
        for l, dj in enumerate(d.disjuncts):
            lam = m.lambdas[j][l]
            for k, con in enumerate(dj.constraints):
                b = con.normalized_rhs
                f = _terms_only(con.lhs)
                e = entry(bl[j], j, (l, k, 0), hull=True) if f.terms else BoundEntry(0.0, 0.0)
                M = e.upper - b
                big_m[(j, l, k)] = M
                name = f"bigm_{j}_{l}_{k}"
                if f.is_affine:
                    coefs = _coefs(f)
                    coefs[lam] = coefs.get(lam, 0.0) + M
                    m.add_row(coefs, "<=", b + M, name, "bigm")
                else:
                    v = m.add_var(f"g_{j}_{l}_{k}", e.lower, e.upper, role="aux")
                    m.add_epigraph(f, v, name=f"epi_{j}_{l}_{k}", role="epigraph")
                    m.add_row({v: 1.0, lam: M}, "<=", b + M, name, "bigm")
    m.meta["big_m"] = big_m
    return m


# ---------------------------------------------------------------------------
# P-split


SHARE_MODES = (False, True, "positive", "signed")


def _groups(d: Disjunction, p: Partition, share, keys) -> list[ShareGroup]:
    if share not in SHARE_MODES:
        raise ReformulationError(f"unknown sharing mode {share!r}; use positive or signed")
    if share:
        return detect_shared_alphas(d, p, signed=share == "signed")
    return [ShareGroup(k, ((k, 1.0),)) for k in sorted(keys)]


def _merged_entry(ab: AlphaBounds, j: int, grp: ShareGroup, region: int | None) -> BoundEntry:
    """Intersection of the member bounds expressed on the representative sum.

    ``region=None`` asks for bounds valid in every disjunct.
    """
    lo, hi = -float("inf"), float("inf")
    prov = None
    for key, s in grp.members:
        e = entry(ab, j, key, region, hull=region is None).scaled(1.0 / s)
        lo = max(lo, e.lower)
        hi = min(hi, e.upper)
        prov = prov or e.provenance
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return BoundEntry(lo, hi, prov)


def compile_psplit(problem: DisjunctiveProblem, partitions=1, bounds=None, linking: bool = False,
                   share_alpha=False, strategy: str = "uniform") -> MixedModel:
    """Lifted P-split formulation.

    For every nonempty split sum ``S`` of every disjunct constraint, a
    variable ``a`` with ``S <= a`` (equality when affine) is disaggregated
    into one copy ``nu_d`` per disjunct with ``lower*lam_d <= nu_d <=
    upper*lam_d``; each disjunct's own copies must satisfy the constraint
    budget ``sum_s nu <= b * lam``.

    ``share_alpha`` merges proportional split sums into one variable:
    ``True``/``"positive"`` for positive factors, ``"signed"`` also for
    negative factors between affine sums.
    """
    parts = resolve_partitions(problem, partitions, strategy)
    bl = as_bound_list(problem, bounds, parts)
    m = base_model(problem, "psplit")
    add_indicators(m, problem)
    links_meta, share_meta = [], []
    for j, (d, p, ab) in enumerate(zip(problem.disjunctions, parts, bl)):
        sums = split_sums(d, p)
        lams = m.lambdas[j]
        nd = len(d.disjuncts)
        # key -> (scale, nu indices per disjunct)
        nu_of: dict = {}
        for grp in _groups(d, p, share_alpha, sums.keys()):
            rep = grp.rep
            l, k, s = rep
            g = _merged_entry(ab, j, grp, None)
            a = m.add_var(f"a_{j}_{l}_{k}_{s}", g.lower, g.upper, role="alpha")
            f = sums[rep]
            m.add_epigraph(f, a, equality=f.is_affine, name=f"split_{j}_{l}_{k}_{s}", role="split")
            nus = []
            for r in range(nd):
                e = _merged_entry(ab, j, grp, r)
                v = m.add_var(f"nu_{j}_{l}_{k}_{s}_{r}", min(0.0, e.lower), max(0.0, e.upper), role="nu")
                nus.append(v)
                m.add_row({v: -1.0, lams[r]: e.lower}, "<=", 0.0, f"nulo_{j}_{l}_{k}_{s}_{r}", "nu_bound")
                m.add_row({v: 1.0, lams[r]: -e.upper}, "<=", 0.0, f"nuhi_{j}_{l}_{k}_{s}_{r}", "nu_bound")
            coefs = {a: 1.0}
            for v in nus:
                coefs[v] = -1.0
            m.add_row(coefs, "=", 0.0, f"disagg_{j}_{l}_{k}_{s}", "disaggregation")
            for key, scale in grp.members:
                nu_of[key] = (scale, nus)
            if len(grp.members) > 1:
                share_meta.append((j, grp))
        for l, dj in enumerate(d.disjuncts):
            for k, con in enumerate(dj.constraints):
                coefs: dict[int, float] = {}
                for s in range(p.P):
                    if (l, k, s) in nu_of:
                        scale, nus = nu_of[(l, k, s)]
                        coefs[nus[l]] = coefs.get(nus[l], 0.0) + scale
                coefs[lams[l]] = coefs.get(lams[l], 0.0) - con.normalized_rhs
                m.add_row(coefs, "<=", 0.0, f"budget_{j}_{l}_{k}", "budget")
            if linking and len(dj.constraints) >= 2:
                from .linking import generate_linking

                for lc in generate_linking(dj, p, problem.lower, problem.upper, l):
                    links_meta.append((j, lc))
                    if not lc.kept:
                        continue
                    s1, n1 = nu_of[(l, lc.k, lc.split)]
                    s2, n2 = nu_of[(l, lc.j, lc.split)]
                    coefs = {}
                    coefs[n1[l]] = coefs.get(n1[l], 0.0) + lc.rho1 * s1
                    coefs[n2[l]] = coefs.get(n2[l], 0.0) + lc.rho2 * s2
                    coefs[lams[l]] = coefs.get(lams[l], 0.0) - lc.bound
                    sense = "<=" if lc.side == "upper" else ">="
                    m.add_row(coefs, sense, 0.0, f"link_{j}_{l}_{lc.k}_{lc.j}_{lc.split}_{lc.sign_tag}_{lc.side}", "linking")
    m.meta.update(partitions=parts, linking=links_meta, shared=share_meta, P=max((p.P for p in parts), default=0))
    return m


# ---------------------------------------------------------------------------
# extended hull (affine only)


def compile_hull_linear(problem: DisjunctiveProblem) -> MixedModel:
    """Extended convex hull with a variable copy per disjunct; affine disjunctions only."""
    for j, d in enumerate(problem.disjunctions):
        if not d.is_affine:
            raise UnsupportedFormulation(f"hull formulation needs affine disjuncts; disjunction {j} is quadratic")
    m = base_model(problem, "hull")
    add_indicators(m, problem)
    for j, d in enumerate(problem.disjunctions):
        lams = m.lambdas[j]
        support = d.support
        copies = {}
        for l in range(len(d.disjuncts)):
            for i in support:
                lo, hi = problem.lower[i], problem.upper[i]
                v = m.add_var(f"xh_{j}_{l}_{i}", min(0.0, lo), max(0.0, hi), role="copy")
                copies[(l, i)] = v
                m.add_row({v: -1.0, lams[l]: lo}, "<=", 0.0, f"xhlo_{j}_{l}_{i}", "copy_bound")
                m.add_row({v: 1.0, lams[l]: -hi}, "<=", 0.0, f"xhhi_{j}_{l}_{i}", "copy_bound")
        for i in support:
            coefs = {i: 1.0}
            for l in range(len(d.disjuncts)):
                coefs[copies[(l, i)]] = -1.0
            m.add_row(coefs, "=", 0.0, f"xsum_{j}_{i}", "disaggregation")
        for l, dj in enumerate(d.disjuncts):
            for k, con in enumerate(dj.constraints):
                coefs = {copies[(l, t.var)]: t.lin for t in con.lhs.terms}
                coefs[lams[l]] = -con.normalized_rhs
                m.add_row(coefs, "<=", 0.0, f"hull_{j}_{l}_{k}", "hull")
    return m


# ---------------------------------------------------------------------------
# two-term cut family


@dataclass(frozen=True)
class TwoTermCut:
    """``sum_{s in subset} S_s(x) <= self_coef * lam_self + other_coef * lam_other``."""

    disjunct: int
    subset: tuple[int, ...]
    lhs: SeparableFunction
    self_coef: float
    other_coef: float


def two_term_cuts(d: Disjunction, p: Partition, bounds: AlphaBounds) -> list[TwoTermCut]:
    """Non-extended realization of the P-split formulation of a two-term disjunction.

    One row per disjunct and nonempty subset of splits (including the full
    set), ``2 (2**P - 1)`` rows in total.
    """
    if len(d.disjuncts) != 2:
        raise ValueError(f"two-term cuts need exactly 2 disjuncts, got {len(d.disjuncts)}")
    if any(len(dj.constraints) != 1 for dj in d.disjuncts):
        raise ValueError("two-term cuts need exactly one constraint per disjunct")
    cuts = []
    for l, dj in enumerate(d.disjuncts):
        con = dj.constraints[0]
        b = con.normalized_rhs
        parts = [con.lhs.restrict(c) for c in p.classes]
        # lower bounds hold while disjunct l is active, upper ones while the other is
        lo = [bounds.get((l, 0, s), l).lower if parts[s].terms else 0.0 for s in range(p.P)]
        hi = [bounds.get((l, 0, s), 1 - l).upper if parts[s].terms else 0.0 for s in range(p.P)]
        for size in range(1, p.P + 1):
            for subset in itertools.combinations(range(p.P), size):
                lhs = SeparableFunction()
                for s in subset:
                    lhs = lhs + parts[s]
                rest = sum(lo[s] for s in range(p.P) if s not in subset)
                cuts.append(TwoTermCut(l, subset, lhs, b - rest, sum(hi[s] for s in subset)))
    return cuts


def compile_two_term(problem: DisjunctiveProblem, partitions=2, bounds=None, bigm_bounds=None,
                     strategy: str = "uniform") -> MixedModel:
    """Big-M model strengthened by the two-term cut family where it applies.

    Disjunctions with two single-constraint disjuncts receive the cuts;
    affine split sums enter the rows directly, quadratic ones through an
    epigraph variable per (disjunct, split).
    """
    parts = resolve_partitions(problem, partitions, strategy)
    bl = as_bound_list(problem, bounds, parts)
    m = compile_bigm(problem, bigm_bounds)
    m.formulation = "2term-cuts"
    n_cuts = 0
    for j, (d, p, ab) in enumerate(zip(problem.disjunctions, parts, bl)):
        if len(d.disjuncts) != 2 or any(len(dj.constraints) != 1 for dj in d.disjuncts):
            continue
        lams = m.lambdas[j]
        alpha: dict[tuple[int, int], int] = {}
        for cut in two_term_cuts(d, p, ab):
            l = cut.disjunct
            coefs: dict[int, float] = {}
            con = d.disjuncts[l].constraints[0]
            for s in cut.subset:
                part = con.lhs.restrict(p.classes[s])
                if not part.terms:
                    continue
                if part.is_affine:
                    for t in part.terms:
                        coefs[t.var] = coefs.get(t.var, 0.0) + t.lin
                else:
                    if (l, s) not in alpha:
                        e = ab.hull((l, 0, s))
                        v = m.add_var(f"a_{j}_{l}_0_{s}", e.lower, e.upper, role="alpha")
                        m.add_epigraph(part, v, name=f"split_{j}_{l}_0_{s}", role="split")
                        alpha[(l, s)] = v
                    coefs[alpha[(l, s)]] = coefs.get(alpha[(l, s)], 0.0) + 1.0
            coefs[lams[l]] = coefs.get(lams[l], 0.0) - cut.self_coef
            coefs[lams[1 - l]] = coefs.get(lams[1 - l], 0.0) - cut.other_coef
            tag = "".join(str(s) for s in cut.subset)
            m.add_row(coefs, "<=", 0.0, f"cut_{j}_{l}_{tag}", "two_term_cut")
            n_cuts += 1
    m.meta.update(partitions=parts, n_cuts=n_cuts)
    return m


def compile_problem(problem: DisjunctiveProblem, formulation: str, partitions=1, bounds=None,
                    linking: bool = False, share_alpha=False, bigm_bounds=None,
                    strategy: str = "uniform") -> MixedModel:
    """Dispatch on the formulation name."""
    if formulation == "bigm":
        return compile_bigm(problem, bigm_bounds if bigm_bounds is not None else bounds)
    if formulation == "psplit":
        return compile_psplit(problem, partitions, bounds, linking, share_alpha, strategy)
    if formulation == "hull":
        return compile_hull_linear(problem)
    if formulation == "2term-cuts":
        return compile_two_term(problem, partitions, bounds, bigm_bounds, strategy)
    raise ReformulationError(f"unknown formulation {formulation!r}; choose from {', '.join(FORMULATIONS)}")
