"""Fourier-Motzkin projection of small polyhedra and LP-based containment checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..mixed import MixedModel
from ..solver.simplex import OPTIMAL, UNBOUNDED, solve_lp


class ProjectionTooLarge(ValueError):
    pass


@dataclass
class Polyhedron:
    """``{y : A y <= b}`` over named variables."""

    A: np.ndarray
    b: np.ndarray
    names: list[str]

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, float)).reshape(-1, len(self.names))
        self.b = np.asarray(self.b, float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise ValueError("row count mismatch between A and b")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def contains_point(self, y, tol: float = 1e-9) -> bool:
        return bool(np.all(self.A @ np.asarray(y, float) <= self.b + tol))

    def reorder(self, names: Sequence[str]) -> "Polyhedron":
        idx = [self.names.index(n) for n in names]
        return Polyhedron(self.A[:, idx], self.b.copy(), list(names))


def polyhedron_from_model(m: MixedModel) -> Polyhedron:
    """Linear rows and finite variable bounds of an affine model (binaries relaxed)."""
    if not m.is_affine:
        raise ValueError("model has nonlinear epigraph rows")
    A, lo, hi = m.linear_arrays()
    rows, rhs = [], []
    for i in range(A.shape[0]):
        if np.isfinite(hi[i]):
            rows.append(A[i])
            rhs.append(hi[i])
        if np.isfinite(lo[i]):
            rows.append(-A[i])
            rhs.append(-lo[i])
    n = m.n_vars
    for v in range(n):
        e = np.zeros(n)
        e[v] = 1.0
        if np.isfinite(m.ub[v]):
            rows.append(e)
            rhs.append(m.ub[v])
        if np.isfinite(m.lb[v]):
            rows.append(-e)
            rhs.append(-m.lb[v])
    return Polyhedron(np.array(rows).reshape(-1, n), np.array(rhs), list(m.names))


def _clean(A: np.ndarray, b: np.ndarray, tol: float = 1e-12):
    """Normalize rows, drop vacuous rows and keep the tightest of parallel duplicates."""
    best: dict[tuple, tuple[np.ndarray, float]] = {}
    infeasible = None
    for a, r in zip(A, b):
        scale = np.max(np.abs(a))
        if scale <= tol:
            if r < -1e-9:
                infeasible = (np.zeros_like(a), -1.0)
            continue
        a_n, r_n = a / scale, r / scale
        a_n[np.abs(a_n) <= tol] = 0.0
        key = tuple(np.round(a_n, 10))
        if key not in best or r_n < best[key][1]:
            best[key] = (a_n, r_n)
    items = [best[k] for k in sorted(best)]
    if infeasible is not None:
        items.append(infeasible)
    if not items:
        return np.zeros((0, A.shape[1])), np.zeros(0)
    return np.array([a for a, _ in items]), np.array([r for _, r in items])


def fm_project(p: Polyhedron, eliminate: Sequence[int | str], max_rows: int = 20000,
               max_vars: int = 24) -> Polyhedron:
    """Project out the given variables by Fourier-Motzkin elimination.

    After each step rows are normalized, duplicates up to positive scaling
    are merged and vacuous rows dropped.  Raises ProjectionTooLarge instead
    of running into the combinatorial blowup.
    """
    if len(p.names) > max_vars:
        raise ProjectionTooLarge(f"{len(p.names)} variables exceed the guard of {max_vars}")
    elim = [p.names.index(e) if isinstance(e, str) else int(e) for e in eliminate]
    A, b = _clean(p.A, p.b)
    for col in elim:
        pos = A[:, col] > 1e-12
        neg = A[:, col] < -1e-12
        zero = ~(pos | neg)
        newA = [A[zero]]
        newb = [b[zero]]
        P_idx, N_idx = np.where(pos)[0], np.where(neg)[0]
        if len(P_idx) * len(N_idx) + zero.sum() > max_rows:
            raise ProjectionTooLarge(f"elimination would create {len(P_idx) * len(N_idx)} rows")
        for i in P_idx:
            for k in N_idx:
                wi, wk = 1.0 / A[i, col], -1.0 / A[k, col]
                row = wi * A[i] + wk * A[k]
                row[col] = 0.0
                newA.append(row[None, :])
                newb.append(np.array([wi * b[i] + wk * b[k]]))
        A, b = _clean(np.vstack(newA), np.concatenate(newb))
    keep = [c for c in range(len(p.names)) if c not in set(elim)]
    return Polyhedron(A[:, keep], b, [p.names[c] for c in keep])


def _max_over(p: Polyhedron, c: np.ndarray, skip: int | None = None) -> float:
    """max c.y over p (optionally without row ``skip``); inf when unbounded, -inf when empty."""
    rows = np.ones(p.n_rows, bool)
    if skip is not None:
        rows[skip] = False
    A, b = p.A[rows], p.b[rows]
    n = len(p.names)
    # free variables split into nonnegative parts
    A2 = np.hstack([A, -A])
    res = solve_lp(np.concatenate([-c, c]), A2, b, bounds=(np.zeros(2 * n), np.full(2 * n, np.inf)))
    if res.status == OPTIMAL:
        return -res.objective
    if res.status == UNBOUNDED:
        return np.inf
    if res.status == "infeasible":
        return -np.inf
    raise RuntimeError(f"LP failed with status {res.status}")


def remove_redundant(p: Polyhedron, tol: float = 1e-9) -> Polyhedron:
    """Drop every row implied by the remaining ones (one LP per row)."""
    keep = list(range(p.n_rows))
    i = 0
    while i < len(keep):
        sub = Polyhedron(p.A[keep], p.b[keep], p.names)
        if _max_over(sub, sub.A[i], skip=i) <= sub.b[i] + tol:
            keep.pop(i)
        else:
            i += 1
    return Polyhedron(p.A[keep], p.b[keep], list(p.names))


def containment_violation(inner: Polyhedron, outer: Polyhedron) -> float:
    """Largest ``max_{y in inner} a.y - b`` over the rows of ``outer`` (<= 0 means contained)."""
    inner = inner.reorder(outer.names)
    worst = -np.inf
    for a, r in zip(outer.A, outer.b):
        worst = max(worst, _max_over(inner, a) - r)
    return float(worst)
