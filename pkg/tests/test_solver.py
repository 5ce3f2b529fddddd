import itertools

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from psplit.instances import make_clustering, make_ex1, make_ex2
from psplit.mixed import MixedModel
from psplit.model import Disjunct, DisjunctConstraint, Disjunction, DisjunctiveProblem, SeparableFunction, UnivariateTerm
from psplit.reformulate import compile_bigm, compile_psplit
from psplit.solver.bnb import NODE_LIMIT, enumerate_assignments, solve_bnb
from psplit.solver.relax import Relaxation, solve_relaxation
from psplit.solver.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, SimplexEngine, solve_lp


def lin(coefs, rhs):
    return DisjunctConstraint(SeparableFunction.linear(coefs), rhs)


# ---------------------------------------------------------------- simplex


def test_box_minimum():
    r = solve_lp([1.0, 0.0], bounds=([0, 0], [1, 1]))
    assert r.status == OPTIMAL and r.objective == 0.0


def test_simplex_triangle():
    r = solve_lp([-1.0, -1.0], A_ub=[[1, 1]], b_ub=[1])
    assert r.objective == pytest.approx(-1.0)


def test_infeasible_and_unbounded():
    assert solve_lp([1.0], A_ub=[[1.0], [-1.0]], b_ub=[0.0, -1.0]).status == INFEASIBLE
    assert solve_lp([-1.0]).status == UNBOUNDED


def test_equality_rows():
    r = solve_lp([1.0, 2.0], A_eq=[[1, 1]], b_eq=[3], bounds=([0, 0], [2, 2]))
    assert r.objective == pytest.approx(4.0)
    assert r.x == pytest.approx([2.0, 1.0])


def _vertex_minimum(A, b, c):
    """Minimum of c.x over {A x <= b} by enumerating basic solutions."""
    n = A.shape[1]
    best = np.inf
    for rows in itertools.combinations(range(A.shape[0]), n):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            best = min(best, c @ x)
    return best


def test_ex2_bigm_relaxation_against_vertex_enumeration():
    m = compile_bigm(make_ex2((1, 1, 1, 1)))
    A, lo, hi = m.linear_arrays()
    rows, rhs = [], []
    for i in range(A.shape[0]):
        if np.isfinite(hi[i]):
            rows.append(A[i]); rhs.append(hi[i])
        if np.isfinite(lo[i]):
            rows.append(-A[i]); rhs.append(-lo[i])
    n = m.n_vars
    for v in range(n):
        e = np.eye(n)[v]
        rows += [e, -e]
        rhs += [m.ub[v], -m.lb[v]]
    ref = _vertex_minimum(np.array(rows), np.array(rhs), m.c())
    assert solve_relaxation(m).objective == pytest.approx(ref, abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6), st.integers(0, 6))
def test_random_lps_match_highs(seed, n, m):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m) + 1.0
    lb, ub = -rng.uniform(0, 3, n), rng.uniform(0, 3, n)
    mine = solve_lp(c, A if m else None, b if m else None, bounds=(lb, ub))
    ref = linprog(c, A_ub=A if m else None, b_ub=b if m else None, bounds=list(zip(lb, ub)), method="highs")
    if ref.status == 2:
        assert mine.status == INFEASIBLE
    else:
        assert mine.status == OPTIMAL
        assert mine.objective == pytest.approx(ref.fun, abs=1e-7)
        assert np.all(A @ mine.x <= b + 1e-7) if m else True


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_warm_start_equals_cold_start(seed):
    rng = np.random.default_rng(seed)
    n, m = 4, 3
    A = rng.normal(size=(m, n))
    eng = SimplexEngine(A, np.full(m, -np.inf), np.ones(m), -np.ones(n), np.ones(n), rng.normal(size=n))
    eng.solve()
    extra = rng.normal(size=(2, n))
    eng.add_rows(extra, np.full(2, -np.inf), np.full(2, 0.5))
    eng.set_bounds(0, -0.5, 0.5)
    c2 = rng.normal(size=n)
    eng.set_objective(np.concatenate([c2, np.zeros(0)]))
    warm = eng.solve()
    cold = solve_lp(c2, np.vstack([A, extra]), np.concatenate([np.ones(m), [0.5, 0.5]]),
                    bounds=(np.r_[-0.5, -np.ones(n - 1)], np.r_[0.5, np.ones(n - 1)]))
    assert warm.objective == pytest.approx(cold.objective, abs=1e-8)
    basic = set(int(b) for b in eng.basis)
    slack = [r for r in range(m + 2) if n + r in basic]
    tight = [r for r in range(m + 2) if n + r not in basic]
    if tight:
        with pytest.raises(ValueError, match="basic activity"):
            eng.remove_rows([tight[0]])
    if not slack:
        return
    drop = slack[0]
    eng.remove_rows([drop])
    after = eng.solve()
    keep = [r for r in range(m + 2) if r != drop]
    cold2 = solve_lp(c2, np.vstack([A, extra])[keep], np.r_[np.ones(m), 0.5, 0.5][keep],
                     bounds=(np.r_[-0.5, -np.ones(n - 1)], np.r_[0.5, np.ones(n - 1)]))
    assert after.objective == pytest.approx(cold2.objective, abs=1e-8)


# ---------------------------------------------------------------- relaxation


def test_affine_model_needs_no_cuts():
    r = solve_relaxation(compile_bigm(make_ex2((1, 0, 0, 0))))
    assert r.ok and r.oa_iterations == 0 and r.converged


def test_ex1_one_split_reaches_box_corner():
    r = solve_relaxation(compile_psplit(make_ex1((1, 0, 0, 0)), 1))
    assert r.objective == pytest.approx(-4.0, abs=1e-6)


def test_parabola_epigraph():
    m = MixedModel(n_original=2)
    x = m.add_var("x", -1.0, 1.0)
    y = m.add_var("y", -5.0, 5.0)
    m.add_epigraph(SeparableFunction.build([UnivariateTerm(x, 1.0)]), y)
    m.objective = {y: 1.0}
    r = solve_relaxation(m)
    assert r.converged and abs(r.objective) <= 1e-6


def test_oa_bounds_increase_towards_convex_optimum():
    rng = np.random.default_rng(3)
    for _ in range(5):
        c = rng.normal(size=3)
        center = rng.uniform(-1, 1, 3)
        m = MixedModel(n_original=3)
        for i in range(3):
            m.add_var(f"x{i}", -3.0, 3.0)
        g = m.add_var("g", 0.0, 1.0)
        m.add_epigraph(SeparableFunction.squared_distance(range(3), center), g)
        m.objective = {i: float(c[i]) for i in range(3)}
        r = Relaxation(m, initial_points=2).solve()
        xv = cp.Variable(3)
        ref = cp.Problem(cp.Minimize(c @ xv), [cp.sum_squares(xv - center) <= 1, xv >= -3, xv <= 3]).solve()
        assert all(h <= ref + 1e-7 for h in r.history)
        assert all(b >= a - 1e-9 for a, b in zip(r.history, r.history[1:]))
        assert r.objective == pytest.approx(ref, abs=1e-4)


# ---------------------------------------------------------------- branch and bound


def _two_term_problem(c):
    d = Disjunction((Disjunct((lin([1.0, 1.0], 1.0),)), Disjunct((lin([-1.0, -2.0], -4.0),))))
    return DisjunctiveProblem(n=2, lower=(0.0, 0.0), upper=(3.0, 3.0), objective=tuple(c), disjunctions=(d,))


@pytest.mark.parametrize("c", [(1.0, 1.0), (-1.0, 0.5), (0.3, -2.0), (-1.0, -1.0)])
def test_bnb_matches_per_disjunct_lps(c):
    ref = min(
        linprog(c, A_ub=[[1, 1]], b_ub=[1], bounds=[(0, 3)] * 2, method="highs").fun,
        linprog(c, A_ub=[[-1, -2]], b_ub=[-4], bounds=[(0, 3)] * 2, method="highs").fun,
    )
    p = _two_term_problem(c)
    for m in (compile_bigm(p), compile_psplit(p, 2)):
        r = solve_bnb(m)
        assert r.status == OPTIMAL and r.objective == pytest.approx(ref, abs=1e-7)


def test_tiny_clustering_agrees_across_formulations():
    p = make_clustering([[0, 0], [1, 0], [0, 1], [1, 1]], 2)
    ref = enumerate_assignments(p)
    assert ref.objective == pytest.approx(1.0, abs=1e-5)
    for m in (compile_bigm(p), compile_psplit(p, 2)):
        assert solve_bnb(m).objective == pytest.approx(ref.objective, abs=1e-5)


def test_infeasible_disjunction():
    d = Disjunction((Disjunct((lin([1.0], -1.0),)), Disjunct((lin([-1.0], -10.0),))))
    p = DisjunctiveProblem(n=1, lower=(0.0,), upper=(5.0,), objective=(1.0,), disjunctions=(d,))
    r = solve_bnb(compile_bigm(p))
    assert r.status == INFEASIBLE and r.x is None


def test_bnb_is_deterministic():
    p = make_clustering([[0, 0], [1, 0], [0, 1], [1, 1], [3, 2]], 2)
    runs = [solve_bnb(compile_psplit(p, 2)) for _ in range(2)]
    assert runs[0].nodes == runs[1].nodes
    assert runs[0].objective == runs[1].objective
    assert np.array_equal(runs[0].x, runs[1].x)


def test_node_limit_reports_gap():
    p = make_clustering([[0, 0], [1, 0], [0, 1], [1, 1], [3, 2]], 2)
    r = solve_bnb(compile_bigm(p), node_limit=2)
    assert r.status == NODE_LIMIT and r.nodes == 2
    assert r.bound <= r.objective + 1e-9 or np.isnan(r.objective)


def test_incumbent_is_feasible_for_the_disjunction():
    from psplit.model import disjunction_satisfied

    p = make_ex1((1, 2, -1, 0.5))
    r = solve_bnb(compile_psplit(p, 2))
    assert r.status == OPTIMAL
    assert all(disjunction_satisfied(d, r.x_original, 1e-5) for d in p.disjunctions)
    assert r.objective == pytest.approx(enumerate_assignments(p).objective, abs=1e-5)
