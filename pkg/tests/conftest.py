"""Shared helpers and the acceptance-summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from psplit.solver.relax import Relaxation

ACCEPTANCE_LINES: list[str] = []


def relax_values(model, objectives, sense="min") -> np.ndarray:
    """Relaxation optimum of ``model`` for each objective over the original variables."""
    rel = Relaxation(model)
    out = []
    for c in objectives:
        full = np.zeros(rel.nv)
        full[: len(c)] = c
        rel.set_objective(full, sense)
        r = rel.solve()
        assert r.ok, r.status
        out.append(r.objective)
    return np.array(out)


def random_objectives(n: int, count: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(count, n))


def lp_oracle(model, c, sense="min") -> float:
    """scipy HiGHS value of the linear relaxation of an affine model."""
    from scipy.optimize import linprog

    A, lo, hi = model.linear_arrays()
    rows, rhs = [], []
    for i in range(A.shape[0]):
        if np.isfinite(hi[i]):
            rows.append(A[i]); rhs.append(hi[i])
        if np.isfinite(lo[i]):
            rows.append(-A[i]); rhs.append(-lo[i])
    full = np.zeros(model.n_vars)
    full[: len(c)] = c
    s = -1.0 if sense == "max" else 1.0
    res = linprog(s * full, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=list(zip(model.lb, model.ub)),
                  method="highs")
    assert res.status == 0, res.message
    return s * res.fun


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


def lift_point(model, problem, x, pattern):
    """Model vector of an integer-feasible point ``x`` with disjunct ``pattern[j]`` active.

    Uses the variable naming of the compilers: ``lam_j_l``, ``a_j_l_k_s``,
    ``nu_j_l_k_s_r``, ``g_j_l_k`` and ``xh_j_l_i``.
    """
    from psplit.partition import resolve_partitions

    parts = model.meta.get("partitions") or resolve_partitions(problem, 1)
    y = np.zeros(model.n_vars)
    y[: problem.n] = x

    def split_value(j, l, k, s):
        con = problem.disjunctions[j].disjuncts[l].constraints[k]
        f = con.lhs.restrict(parts[j].classes[s])
        return sum(t.quad * (x[t.var] - t.center) ** 2 + t.lin * x[t.var] for t in f.terms)

    for v, name in enumerate(model.names[problem.n:], start=problem.n):
        head, *idx = name.split("_")
        idx = [int(i) for i in idx] if all(i.isdigit() for i in idx) else None
        if idx is None:
            continue
        if head == "lam":
            y[v] = float(pattern[idx[0]] == idx[1])
        elif head == "a":
            y[v] = split_value(*idx)
        elif head == "nu":
            j, l, k, s, r = idx
            y[v] = split_value(j, l, k, s) if pattern[j] == r else 0.0
        elif head == "g":
            j, l, k = idx
            con = problem.disjunctions[j].disjuncts[l].constraints[k]
            y[v] = sum(t.quad * (x[t.var] - t.center) ** 2 + t.lin * x[t.var] for t in con.lhs.terms)
        elif head == "xh":
            j, l, i = idx
            y[v] = x[i] if pattern[j] == l else 0.0
    return y


def satisfied_pattern(problem, x, tol=1e-9):
    """First satisfied disjunct of every disjunction, or None."""
    from psplit.model import evaluate

    out = []
    for d in problem.disjunctions:
        for l, dj in enumerate(d.disjuncts):
            if all(evaluate(c.lhs, x) <= c.rhs + tol for c in dj.constraints):
                out.append(l)
                break
        else:
            return None
    return out
