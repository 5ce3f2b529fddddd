"""Dense bounded-variable simplex engine.

Rows are stored in computational form ``A x - s = 0`` with bounds on both the
structural variables ``x`` and the row activities ``s``.  The engine keeps a
full tableau ``T = B^-1 [A | -I]`` and supports warm starts: objective
changes re-enter the primal simplex, bound changes and appended rows keep
the basis dual feasible and re-enter the dual simplex.

Pricing is Dantzig's rule; after a run of degenerate pivots the engine falls
back to Bland's rule (lowest eligible index), which cannot cycle.  Ratio-test
ties break towards the larger pivot magnitude and then the lower index, so
identical inputs replay identical pivot sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LpResult:
    status: str
    x: np.ndarray
    objective: float
    iterations: int = 0
    activities: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class Basis:
    basic: tuple[int, ...]
    status: tuple[int, ...]
    n_rows: int


class SimplexEngine:
    """Warm-startable LP ``min c.x  s.t.  row_lo <= A x <= row_hi, lb <= x <= ub``."""

    primal_tol = 1e-9
    dual_tol = 1e-9
    pivot_tol = 1e-9
    refactor_every = 64
    degenerate_streak = 30

    def __init__(self, A, row_lo, row_hi, lb, ub, c):
        A = np.atleast_2d(np.asarray(A, float))
        lb = np.asarray(lb, float)
        ub = np.asarray(ub, float)
        n = lb.size
        if A.size == 0:
            A = np.zeros((0, n))
        if A.shape[1] != n:
            raise ValueError("A has wrong column count")
        if np.any(np.isinf(lb) & np.isinf(ub)):
            raise ValueError("free structural variables are not supported")
        if np.any(lb > ub):
            raise ValueError("inverted variable bounds")
        self.n = n
        self.A = A.copy()
        self.m = A.shape[0]
        self.lb = np.concatenate([lb, np.asarray(row_lo, float)])
        self.ub = np.concatenate([ub, np.asarray(row_hi, float)])
        self.c = np.concatenate([np.asarray(c, float), np.zeros(self.m)])
        self.iterations = 0
        self._since_refactor = 0
        self._slack_basis()

    # ------------------------------------------------------------------ setup

    @property
    def N(self) -> int:
        return self.n + self.m

    def _full_matrix(self) -> np.ndarray:
        return np.hstack([self.A, -np.eye(self.m)])

    def _slack_basis(self):
        m, n = self.m, self.n
        self.basis = np.arange(n, n + m)
        self.status = np.full(self.N, AT_LOWER, dtype=np.int8)
        self.status[self.basis] = BASIC
        self.z = np.zeros(self.N)
        for j in range(n):
            self._place_nonbasic(j)
        self.T = np.hstack([-self.A, np.eye(m)])
        self._recompute_primal()
        self._recompute_duals()

    def _place_nonbasic(self, j: int):
        lo, hi = self.lb[j], self.ub[j]
        if self.status[j] == AT_UPPER and np.isfinite(hi):
            self.z[j] = hi
        elif np.isfinite(lo):
            self.status[j] = AT_LOWER
            self.z[j] = lo
        else:
            self.status[j] = AT_UPPER
            self.z[j] = hi

    def _recompute_primal(self):
        nb = self.status != BASIC
        self.z[self.basis] = -(self.T[:, nb] @ self.z[nb]) if self.m else 0.0

    def _recompute_duals(self):
        self.d = self.c - self.c[self.basis] @ self.T if self.m else self.c.copy()
        self.d[self.basis] = 0.0

    def refactor(self) -> bool:
        """Rebuild the tableau from the basis; False if the basis is singular."""
        if self.m == 0:
            self._recompute_duals()
            return True
        M = self._full_matrix()
        B = M[:, self.basis]
        try:
            T = np.linalg.solve(B, M)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(T)):
            return False
        T[np.abs(T) < 1e-14] = 0.0
        self.T = T
        self._recompute_primal()
        self._recompute_duals()
        self._since_refactor = 0
        return True

    # ------------------------------------------------------------ modifiers

    def set_objective(self, c):
        self.c[: self.n] = np.asarray(c, float)
        self._recompute_duals()

    def set_bounds(self, j: int, lo: float, hi: float):
        if lo > hi:
            raise ValueError("inverted bounds")
        self.lb[j], self.ub[j] = lo, hi
        if self.status[j] != BASIC:
            old = self.z[j]
            self._place_nonbasic(j)
            delta = self.z[j] - old
            if delta and self.m:
                self.z[self.basis] -= self.T[:, j] * delta

    def set_row_bounds(self, i: int, lo: float, hi: float):
        self.set_bounds(self.n + i, lo, hi)

    def add_rows(self, A_new, lo, hi):
        """Append rows; their activities enter the basis."""
        A_new = np.atleast_2d(np.asarray(A_new, float))
        k = A_new.shape[0]
        if k == 0:
            return
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        m, N = self.m, self.N
        # insert k slack columns at the end
        T = np.zeros((m + k, N + k))
        T[:m, :N] = self.T
        # tableau row of a new row: (a x - s_new) expressed in nonbasic terms
        full_new = np.zeros((k, N + k))
        full_new[:, : self.n] = A_new
        full_new[:, N:] = -np.eye(k)
        coef_on_basic = full_new[:, self.basis]
        rows = full_new.copy()
        if m:
            rows[:, :N] -= coef_on_basic @ self.T
        rows[:, self.basis] = 0.0
        # normalize so the new slack has coefficient +1
        rows *= -1.0
        T[m:, :] = rows
        self.T = T
        self.A = np.vstack([self.A, A_new])
        self.lb = np.concatenate([self.lb, lo])
        self.ub = np.concatenate([self.ub, hi])
        self.c = np.concatenate([self.c, np.zeros(k)])
        self.status = np.concatenate([self.status, np.full(k, BASIC, dtype=np.int8)])
        self.z = np.concatenate([self.z, np.zeros(k)])
        self.d = np.concatenate([self.d, np.zeros(k)])
        self.basis = np.concatenate([self.basis, np.arange(N, N + k)])
        self.m += k
        new_slacks = np.arange(N, N + k)
        self.z[new_slacks] = self.A[m:] @ self.z[: self.n]

    def remove_rows(self, rows) -> None:
        """Delete rows whose activity variables are basic; the basis stays valid."""
        rows = sorted({int(r) for r in rows})
        if not rows:
            return
        cols = [self.n + r for r in rows]
        pos = {int(b): i for i, b in enumerate(self.basis)}
        if any(c not in pos for c in cols):
            raise ValueError("only rows with a basic activity can be removed")
        keep_t = np.ones(self.m, bool)
        keep_t[[pos[c] for c in cols]] = False
        keep_c = np.ones(self.N, bool)
        keep_c[cols] = False
        keep_r = np.ones(self.m, bool)
        keep_r[rows] = False
        remap = np.cumsum(keep_c) - 1
        self.T = self.T[np.ix_(keep_t, keep_c)]
        self.basis = remap[self.basis[keep_t]]
        self.A = self.A[keep_r]
        self.lb, self.ub, self.c = self.lb[keep_c], self.ub[keep_c], self.c[keep_c]
        self.status, self.z, self.d = self.status[keep_c], self.z[keep_c], self.d[keep_c]
        self.m = int(keep_r.sum())

    def get_basis(self) -> Basis:
        return Basis(tuple(int(b) for b in self.basis), tuple(int(s) for s in self.status), self.m)

    def set_basis(self, basis: Basis) -> bool:
        """Restore a saved basis; rows appended since it was saved stay basic."""
        m_old = basis.n_rows
        n_old_cols = self.n + m_old
        status = np.empty(self.N, dtype=np.int8)
        status[:n_old_cols] = np.asarray(basis.status[:n_old_cols], dtype=np.int8)
        status[n_old_cols:] = BASIC
        extra = np.arange(n_old_cols, self.N)
        new_basis = np.concatenate([np.asarray(basis.basic, int), extra]) if extra.size else np.asarray(basis.basic, int)
        saved = (self.basis.copy(), self.status.copy(), self.T.copy(), self.z.copy(), self.d.copy())
        self.basis = new_basis
        self.status = status
        for j in np.nonzero(status != BASIC)[0]:
            self._place_nonbasic(int(j))
        if not self.refactor():
            self.basis, self.status, self.T, self.z, self.d = saved
            return False
        return True

    # ----------------------------------------------------------- utilities

    def _infeasibility(self):
        zb = self.z[self.basis]
        below = self.lb[self.basis] - zb
        above = zb - self.ub[self.basis]
        return below, above

    def primal_feasible(self, tol=None) -> bool:
        tol = self.primal_tol if tol is None else tol
        below, above = self._infeasibility()
        return not (np.any(below > tol) or np.any(above > tol))

    def dual_feasible(self, tol=None) -> bool:
        tol = self.dual_tol if tol is None else tol
        free_move = self.lb < self.ub
        at_lo = (self.status == AT_LOWER) & free_move
        at_hi = (self.status == AT_UPPER) & free_move
        return not (np.any(self.d[at_lo] < -tol) or np.any(self.d[at_hi] > tol))

    def _pivot(self, r: int, q: int):
        T = self.T
        piv = T[r, q]
        row = T[r] / piv
        row[np.abs(row) < 1e-15] = 0.0
        T[r] = row
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], row)
            T[nz, q] = 0.0
        dq = self.d[q]
        if dq:
            self.d -= dq * row
        leaving = self.basis[r]
        self.basis[r] = q
        self.status[q] = BASIC
        self.d[q] = 0.0
        self.iterations += 1
        self._since_refactor += 1
        return leaving

    def _maybe_refactor(self):
        if self._since_refactor >= self.refactor_every:
            self.refactor()

    def _choose_entering(self, d, bland: bool):
        movable = self.lb < self.ub
        can_up = (self.status == AT_LOWER) & movable & (d < -self.dual_tol)
        can_dn = (self.status == AT_UPPER) & movable & (d > self.dual_tol)
        cand = np.nonzero(can_up | can_dn)[0]
        if cand.size == 0:
            return -1, 0
        if bland:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(np.abs(d[cand]))])
        return q, (1 if can_up[q] else -1)

    def _ratio_test(self, q: int, direction: int, phase1: bool, bland: bool):
        """Return (step, row or -1 for bound flip / -2 unbounded, bound the leaving var hits)."""
        col = self.T[:, q]
        g = -direction * col  # rate of change of basic variables
        zb = self.z[self.basis]
        lb = self.lb[self.basis]
        ub = self.ub[self.basis]
        tol = self.primal_tol
        steps = np.full(self.m, np.inf)
        target = np.zeros(self.m)
        up = g > self.pivot_tol
        dn = g < -self.pivot_tol
        if phase1:
            below = zb < lb - tol
            above = zb > ub + tol
            feas = ~(below | above)
            m1 = up & feas & np.isfinite(ub)
            steps[m1] = (ub[m1] - zb[m1]) / g[m1]
            target[m1] = ub[m1]
            m2 = dn & feas & np.isfinite(lb)
            steps[m2] = (lb[m2] - zb[m2]) / g[m2]
            target[m2] = lb[m2]
            m3 = up & below
            steps[m3] = (lb[m3] - zb[m3]) / g[m3]
            target[m3] = lb[m3]
            m4 = dn & above
            steps[m4] = (ub[m4] - zb[m4]) / g[m4]
            target[m4] = ub[m4]
        else:
            m1 = up & np.isfinite(ub)
            steps[m1] = (ub[m1] - zb[m1]) / g[m1]
            target[m1] = ub[m1]
            m2 = dn & np.isfinite(lb)
            steps[m2] = (lb[m2] - zb[m2]) / g[m2]
            target[m2] = lb[m2]
        steps = np.maximum(steps, 0.0)
        flip = self.ub[q] - self.lb[q]
        best = steps.min() if self.m else np.inf
        if flip <= best:
            if not np.isfinite(flip):
                return np.inf, -2, 0.0
            return flip, -1, 0.0
        ties = np.nonzero(steps <= best + 1e-12)[0]
        if bland:
            r = int(min(ties, key=lambda i: self.basis[i]))
        else:
            mag = np.abs(g[ties])
            r = int(ties[np.argmax(mag)])
        return float(steps[r]), r, float(target[r])

    def _apply_step(self, q: int, direction: int, step: float):
        if step:
            self.z[q] += direction * step
            self.z[self.basis] -= direction * step * self.T[:, q]

    def _primal_loop(self, phase1: bool, max_iter: int) -> str:
        degenerate = 0
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            if phase1:
                below, above = self._infeasibility()
                bad_lo = below > self.primal_tol
                bad_hi = above > self.primal_tol
                if not (bad_lo.any() or bad_hi.any()):
                    return OPTIMAL
                cb = np.where(bad_lo, -1.0, np.where(bad_hi, 1.0, 0.0))
                d = -(cb @ self.T)
                d[self.basis] = 0.0
            else:
                d = self.d
            bland = degenerate >= self.degenerate_streak
            q, direction = self._choose_entering(d, bland)
            if q < 0:
                return INFEASIBLE if phase1 else OPTIMAL
            step, r, target = self._ratio_test(q, direction, phase1, bland)
            if r == -2:
                return INFEASIBLE if phase1 else UNBOUNDED
            degenerate = degenerate + 1 if step <= 1e-12 else 0
            self._apply_step(q, direction, step)
            if r == -1:
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.z[q] = self.ub[q] if direction > 0 else self.lb[q]
                self.iterations += 1
                continue
            leaving = self._pivot(r, q)
            self.z[leaving] = target
            self.status[leaving] = AT_UPPER if target == self.ub[leaving] and target != self.lb[leaving] else AT_LOWER
            self._maybe_refactor()

    def _dual_loop(self, max_iter: int) -> str:
        degenerate = 0
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            below, above = self._infeasibility()
            infeas = np.maximum(below, above)
            bad = np.nonzero(infeas > self.primal_tol)[0]
            if bad.size == 0:
                return OPTIMAL
            bland = degenerate >= self.degenerate_streak
            if bland:
                r = int(min(bad, key=lambda i: self.basis[i]))
            else:
                r = int(bad[np.argmax(infeas[bad])])
            p = self.basis[r]
            row = self.T[r]
            movable = (self.lb < self.ub) & (self.status != BASIC)
            going_up = below[r] > self.primal_tol
            at_lo = self.status == AT_LOWER
            at_hi = self.status == AT_UPPER
            if going_up:
                elig = movable & ((at_lo & (row < -self.pivot_tol)) | (at_hi & (row > self.pivot_tol)))
            else:
                elig = movable & ((at_lo & (row > self.pivot_tol)) | (at_hi & (row < -self.pivot_tol)))
            cand = np.nonzero(elig)[0]
            if cand.size == 0:
                return INFEASIBLE
            ratios = np.abs(self.d[cand]) / np.abs(row[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12]
            if bland:
                q = int(ties[0])
            else:
                q = int(ties[np.argmax(np.abs(row[ties]))])
            target = self.lb[p] if going_up else self.ub[p]
            dz_q = (self.z[p] - target) / row[q]
            degenerate = degenerate + 1 if best <= 1e-12 else 0
            self.z[q] += dz_q
            self.z[self.basis] -= dz_q * self.T[:, q]
            self._pivot(r, q)
            self.z[p] = target
            self.status[p] = AT_LOWER if going_up else AT_UPPER
            if self.lb[p] == self.ub[p]:
                self.status[p] = AT_LOWER
            self._maybe_refactor()

    # ----------------------------------------------------------------- solve

    def solve(self, max_iter: int | None = None) -> LpResult:
        res = self._solve_from_basis(max_iter)
        if res.status == NUMERICAL:
            # a drifted warm start; retry once from the slack basis
            self._slack_basis()
            res = self._solve_from_basis(max_iter if max_iter is None else max_iter + self.iterations)
        return res

    def _solve_from_basis(self, max_iter: int | None) -> LpResult:
        if max_iter is None:
            max_iter = self.iterations + 50 * (self.N + 10)
        for attempt in range(3):
            if not self.primal_feasible():
                if self.dual_feasible():
                    status = self._dual_loop(max_iter)
                    if status == INFEASIBLE:
                        # confirm with a fresh factorization before declaring it
                        self.refactor()
                        if self.dual_feasible() and not self.primal_feasible():
                            status = self._dual_loop(max_iter)
                            if status == INFEASIBLE:
                                return self._result(INFEASIBLE)
                        continue
                    if status != OPTIMAL:
                        return self._result(status)
                else:
                    status = self._primal_loop(True, max_iter)
                    if status == INFEASIBLE:
                        self.refactor()
                        if not self.primal_feasible():
                            status = self._primal_loop(True, max_iter)
                            if status == INFEASIBLE:
                                return self._result(INFEASIBLE)
                        continue
                    if status != OPTIMAL:
                        return self._result(status)
            self._recompute_duals()
            status = self._primal_loop(False, max_iter)
            if status in (UNBOUNDED, ITERATION_LIMIT):
                return self._result(status)
            if not self.refactor():
                return self._result(NUMERICAL)
            if self.primal_feasible(1e-8) and self.dual_feasible(1e-8):
                return self._result(OPTIMAL)
        return self._result(NUMERICAL)

    def _result(self, status: str) -> LpResult:
        x = self.z[: self.n].copy()
        x = np.clip(x, self.lb[: self.n], self.ub[: self.n]) if status == OPTIMAL else x
        obj = float(self.c[: self.n] @ x)
        return LpResult(status, x, obj, self.iterations, self.z[self.n:].copy())


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None) -> LpResult:
    """Minimize ``c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and variable bounds.

    ``bounds`` is a pair of arrays ``(lb, ub)``; every variable needs at
    least one finite bound.  The result reports ``optimal``, ``infeasible``,
    ``unbounded`` or a numerical failure status, never a silent wrong value.
    """
    c = np.asarray(c, float)
    n = c.size
    if bounds is None:
        lb, ub = np.zeros(n), np.full(n, np.inf)
    else:
        lb, ub = (np.asarray(b, float) for b in bounds)
    blocks, lo, hi = [], [], []
    if A_ub is not None and np.size(A_ub):
        A_ub = np.atleast_2d(np.asarray(A_ub, float))
        blocks.append(A_ub)
        lo.append(np.full(A_ub.shape[0], -np.inf))
        hi.append(np.asarray(b_ub, float))
    if A_eq is not None and np.size(A_eq):
        A_eq = np.atleast_2d(np.asarray(A_eq, float))
        blocks.append(A_eq)
        lo.append(np.asarray(b_eq, float))
        hi.append(np.asarray(b_eq, float))
    A = np.vstack(blocks) if blocks else np.zeros((0, n))
    eng = SimplexEngine(A, np.concatenate(lo) if lo else [], np.concatenate(hi) if hi else [], lb, ub, c)
    return eng.solve()
