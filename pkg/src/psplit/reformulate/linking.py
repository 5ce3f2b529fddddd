"""Linking rows between split sums of different constraints in one disjunct."""

from __future__ import annotations

from dataclasses import dataclass

from ..bounds import function_range
from ..model import Disjunct
from ..partition import Partition

SIGN_PAIRS = ((1, 1), (1, -1))
TOL = 1e-9


@dataclass(frozen=True)
class LinkingConstraint:
    """``rho1 * S_k + rho2 * S_j`` bounded above (side upper) or below by ``bound``."""

    disjunct: int
    split: int
    k: int
    j: int
    rho1: int
    rho2: int
    side: str
    bound: float
    kept: bool
    reason: str = ""

    @property
    def sign_tag(self) -> str:
        return ("p" if self.rho1 > 0 else "m") + ("p" if self.rho2 > 0 else "m")


def _same_signs(f1, f2) -> bool:
    c1 = {t.var: t.lin for t in f1.terms}
    c2 = {t.var: t.lin for t in f2.terms}
    shared = set(c1) & set(c2)
    return all((c1[v] > 0) == (c2[v] > 0) for v in shared if c1[v] and c2[v])


def generate_linking(dj: Disjunct, p: Partition, lower, upper, disjunct: int = 0) -> list[LinkingConstraint]:
    """Every candidate linking row of one disjunct, flagged kept or dropped.

    Candidates cover constraint pairs, splits, the sign pairs (+,+) and (+,-)
    and both sides.  A candidate is dropped when the split sums share no
    variable, when (affine case) all shared variables keep their signs, or
    when the combined box bound equals the sum of the separate bounds.
    """
    out = []
    n = len(dj.constraints)
    for k in range(n):
        for j in range(k + 1, n):
            for s, cls in enumerate(p.classes):
                fk = dj.constraints[k].lhs.restrict(cls)
                fj = dj.constraints[j].lhs.restrict(cls)
                for r1, r2 in SIGN_PAIRS:
                    g1, g2 = fk.scaled(r1), fj.scaled(r2)
                    comb = g1 + g2
                    lo, hi = function_range(comb, lower, upper)
                    lo1, hi1 = function_range(g1, lower, upper)
                    lo2, hi2 = function_range(g2, lower, upper)
                    reason = ""
                    if not fk.terms or not fj.terms or not set(fk.support) & set(fj.support):
                        reason = "disjoint-support"
                    elif fk.is_affine and fj.is_affine and _same_signs(g1, g2):
                        reason = "same-signs"
                    for side, bound, sep in (("upper", hi, hi1 + hi2), ("lower", lo, lo1 + lo2)):
                        why = reason
                        if not why and abs(bound - sep) <= TOL * (1 + abs(sep)):
                            why = "additive-bounds"
                        out.append(LinkingConstraint(disjunct, s, k, j, r1, r2, side, bound, not why, why))
    return out
