import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import lift_point, lp_oracle, random_objectives, relax_values, satisfied_pattern
from psplit.bounds import AlphaBounds, BoundEntry, compute_bounds, function_range
from psplit.instances import make_ex1, make_ex2, random_affine_problem
from psplit.model import (
    Disjunct,
    DisjunctConstraint,
    Disjunction,
    DisjunctiveProblem,
    SeparableFunction,
)
from psplit.partition import Partition, partition_uniform, resolve_partitions
from psplit.reformulate import (
    Polyhedron,
    ProjectionTooLarge,
    ReformulationError,
    UnsupportedFormulation,
    compile_bigm,
    compile_hull_linear,
    compile_problem,
    compile_psplit,
    compile_two_term,
    containment_violation,
    fm_project,
    generate_linking,
    remove_redundant,
    two_term_cuts,
)


def lin(coefs, rhs):
    return DisjunctConstraint(SeparableFunction.linear(coefs), rhs)


def two_term(a, b, n=None, box=(0.0, 5.0)):
    """Disjunction of one constraint each, ``a`` and ``b`` as (coefs, rhs)."""
    n = n or len(a[0])
    d = Disjunction((Disjunct((lin(*a),)), Disjunct((lin(*b),))))
    return DisjunctiveProblem(n=n, lower=(box[0],) * n, upper=(box[1],) * n, disjunctions=(d,))


# ---------------------------------------------------------------- big-M


def test_bigm_interval_coefficient_ex1():
    m = compile_bigm(make_ex1())
    assert m.meta["big_m"][(0, 0, 0)] == pytest.approx(63.0)
    assert m.meta["big_m"][(0, 1, 0)] == pytest.approx(16.0 + 12.0)


def test_bigm_obbt_coefficient_ex1():
    p = make_ex1()
    m = compile_bigm(p, compute_bounds(p, resolve_partitions(p, 1), "obbt-union"))
    assert m.meta["big_m"][(0, 1, 0)] == pytest.approx(14.0, abs=1e-9)


def test_bigm_zero_coefficient_is_unconditional():
    p = two_term(([1.0], 5.0), ([-1.0], -1.0))
    m = compile_bigm(p)
    assert m.meta["big_m"][(0, 0, 0)] == 0.0
    row = next(r for r in m.rows if r.name == "bigm_0_0_0")
    assert dict(row.coefs) == {0: 1.0} and row.rhs == 5.0


def test_bigm_counts_and_choice_row():
    m = compile_bigm(make_ex1())
    c = m.counts()
    assert c["binary"] == 2 and c["epigraph_rows"] == 1
    assert any(r.name == "one_of_0" and r.sense == "=" and r.rhs == 1.0 for r in m.rows)


def test_missing_bound_entry():
    p = make_ex1()
    with pytest.raises(ReformulationError, match="missing bound"):
        compile_bigm(p, AlphaBounds({(0, 0, 0): BoundEntry(0, 64)}))


# ---------------------------------------------------------------- P-split


def test_one_split_relaxation_equals_bigm_ex1():
    p = make_ex1()
    objs = random_objectives(4, 10, 3)
    a = relax_values(compile_psplit(p, 1), objs)
    b = relax_values(compile_bigm(p), objs)
    assert np.max(np.abs(a - b)) <= 1e-6


def test_three_split_variable_counts():
    p = two_term(([1.0, 2.0, -1.0], 1.0), ([-1.0, 1.0, 1.0], 2.0))
    m = compile_psplit(p, 3)
    c = m.counts()
    assert c["extra_continuous"] == 3 * (2 * 2 + 2) == 18
    assert c["binary"] == 2


def test_affine_split_rows_are_equalities():
    m = compile_psplit(make_ex1(), 2)
    senses = {r.name: r.sense for r in m.rows}
    assert senses["split_0_1_0_0"] == senses["split_0_1_0_1"] == "="
    assert {e.name for e in m.epigraphs} == {"split_0_0_0_0", "split_0_0_0_1"}


def test_ex2_linking_candidates():
    m = compile_psplit(make_ex2(), 2, linking=True)
    assert len(m.meta["linking"]) == 16
    kept = sum(lc.kept for _, lc in m.meta["linking"])
    assert kept == m.row_roles.count("linking") > 0


def test_linking_requires_matching_bounds_count():
    p = make_ex1()
    with pytest.raises(ReformulationError):
        compile_psplit(p, 1, [AlphaBounds(), AlphaBounds()])


def test_unknown_sharing_mode():
    with pytest.raises(ReformulationError, match="sharing"):
        compile_psplit(make_ex1(), 1, share_alpha="sometimes")


def test_unknown_formulation():
    with pytest.raises(ReformulationError, match="unknown formulation"):
        compile_problem(make_ex1(), "perspective")


def test_sharing_reduces_variables():
    p = two_term(([1.0, 1.0], 3.0), ([2.0, 2.0], 9.0))
    plain = compile_psplit(p, 1).counts()["extra_continuous"]
    shared = compile_psplit(p, 1, share_alpha=True)
    assert shared.counts()["extra_continuous"] < plain
    assert len(shared.meta["shared"]) == 1


# ---------------------------------------------------------------- hull


def test_hull_refuses_quadratic():
    with pytest.raises(UnsupportedFormulation, match="quadratic"):
        compile_hull_linear(make_ex1())


def test_hull_single_disjunct_is_the_disjunct():
    d = Disjunction((Disjunct((lin([1.0, 2.0], 4.0), lin([-1.0, 1.0], 1.0))),))
    p = DisjunctiveProblem(n=2, lower=(0.0, 0.0), upper=(5.0, 5.0), disjunctions=(d,))
    from scipy.optimize import linprog

    for c in random_objectives(2, 10, 8):
        ref = linprog(c, A_ub=[[1, 2], [-1, 1]], b_ub=[4, 1], bounds=[(0, 5)] * 2, method="highs").fun
        assert lp_oracle(compile_hull_linear(p), c) == pytest.approx(ref, abs=1e-7)


def test_hull_two_var_matches_n_split():
    p = two_term(([1.0, 1.0], 1.0), ([-1.0, -2.0], -4.0), box=(0.0, 3.0))
    objs = random_objectives(2, 20, 2)
    h = relax_values(compile_hull_linear(p), objs)
    s = relax_values(compile_psplit(p, 2, share_alpha="signed"), objs)
    assert np.max(np.abs(h - s)) <= 1e-6


# ---------------------------------------------------------------- linking


def test_linking_example_kept():
    p = make_ex2()
    part = Partition.of([[0, 1], [2, 3]])
    cands = generate_linking(p.disjunctions[0].disjuncts[0], part, p.lower, p.upper, 0)
    lc = next(c for c in cands if c.split == 0 and (c.rho1, c.rho2) == (1, -1) and c.side == "upper")
    assert lc.bound == pytest.approx(11.0) and lc.kept
    dj = p.disjunctions[0].disjuncts[0]
    f1 = dj.constraints[0].lhs.restrict([0, 1])
    f2 = dj.constraints[1].lhs.restrict([0, 1]).scaled(-1)
    assert function_range(f1, p.lower, p.upper)[1] + function_range(f2, p.lower, p.upper)[1] == pytest.approx(16.0)
    assert len(cands) == 8


def test_linking_disjoint_support_dropped():
    dj = Disjunct((lin({0: 1.0}, 1.0), lin({1: 1.0}, 1.0)))
    cands = generate_linking(dj, Partition.of([[0, 1]]), (0, 0), (5, 5))
    assert cands and all(not c.kept and c.reason == "disjoint-support" for c in cands)


def test_linking_positive_pair_is_redundant():
    dj = Disjunct((lin([1.0, 1.0], 1.0), lin([2.0, 1.0], 1.0)))
    cands = generate_linking(dj, Partition.of([[0, 1]]), (0, 0), (5, 5))
    pp = [c for c in cands if (c.rho1, c.rho2) == (1, 1)]
    assert pp and not any(c.kept for c in pp)
    f1, f2 = dj.constraints[0].lhs, dj.constraints[1].lhs
    r1, r2, r = (function_range(f, (0, 0), (5, 5)) for f in (f1, f2, f1 + f2))
    assert r[1] == r1[1] + r2[1] and r[0] == r1[0] + r2[0]


def test_linking_rows_hold_on_ex2_grid():
    p = make_ex2()
    m = compile_psplit(p, 2, linking=True)
    links = [r for r, role in zip(m.rows, m.row_roles) if role == "linking"]
    assert links
    worst, n_feasible = 0.0, 0
    for x in itertools.product(np.arange(0.0, 5.01, 0.5), repeat=4):
        x = np.array(x)
        pat = satisfied_pattern(p, x)
        if pat is None:
            continue
        n_feasible += 1
        y = lift_point(m, p, x, pat)
        worst = max(worst, max(r.violation(y) for r in links))
        assert m.max_violation(y) <= 1e-9
    assert n_feasible > 0 and worst <= 1e-9


# ---------------------------------------------------------------- two-term cuts


def test_two_term_cut_count():
    p = make_ex1()
    part = partition_uniform(4, 2)
    ab = compute_bounds(p, [part])[0]
    cuts = two_term_cuts(p.disjunctions[0], part, ab)
    assert len(cuts) == 6
    assert len(two_term_cuts(p.disjunctions[0], partition_uniform(4, 4), compute_bounds(p, [partition_uniform(4, 4)])[0])) == 30


def test_one_split_cuts_are_bigm_rows():
    p = two_term(([1.0, 2.0], 3.0), ([-1.0, 1.0], -1.0))
    part = Partition.of([[0, 1]])
    ab = compute_bounds(p, [part])[0]
    M = compile_bigm(p).meta["big_m"]
    for cut in two_term_cuts(p.disjunctions[0], part, ab):
        l = cut.disjunct
        b = p.disjunctions[0].disjuncts[l].constraints[0].rhs
        # S <= s lam_l + o (1 - lam_l)  versus  S <= b + M (1 - lam_l)
        assert cut.self_coef == pytest.approx(b)
        assert cut.other_coef == pytest.approx(b + M[(0, l, 0)])


def test_two_term_cut_rejects_three_disjuncts():
    c = lin([1.0], 1.0)
    d = Disjunction((Disjunct((c,)), Disjunct((c,)), Disjunct((c,))))
    with pytest.raises(ValueError, match="exactly 2"):
        two_term_cuts(d, Partition.of([[0]]), AlphaBounds())


def test_two_term_cuts_valid_on_ex1_grid():
    p = make_ex1()
    m = compile_two_term(p, 2)
    assert m.meta["n_cuts"] == 6
    checked = 0
    rng = np.random.default_rng(5)
    pts = list(itertools.product(np.linspace(-4, 4, 9), repeat=4)) + list(rng.normal(scale=0.4, size=(500, 4)))
    for x in pts:
        x = np.clip(np.array(x, float), -4, 4)
        pat = satisfied_pattern(p, x)
        if pat is None:
            continue
        checked += 1
        assert m.max_violation(lift_point(m, p, x, pat)) <= 1e-9
    assert checked > 100


def test_two_term_relaxation_at_least_bigm():
    p = make_ex1()
    objs = random_objectives(4, 8, 4)
    cut = relax_values(compile_two_term(p, 2), objs)
    base = relax_values(compile_bigm(p), objs)
    assert np.all(cut >= base - 1e-7)


# ---------------------------------------------------------------- Fourier-Motzkin


def test_fm_interval_strip_has_no_constraint():
    p = Polyhedron([[1.0, -1.0], [-1.0, 1.0]], [0.0, 1.0], ["x", "y"])
    out = fm_project(p, ["y"])
    assert out.names == ["x"] and out.n_rows == 0


def test_fm_lifted_square_round_trip():
    # square described through z = x + y; eliminating z gives the square back
    A = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [1, 1, -1], [-1, -1, 1]]
    p = Polyhedron(A, [1, 0, 1, 0, 0, 0], ["x", "y", "z"])
    out = remove_redundant(fm_project(p, ["z"]))
    square = Polyhedron([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 0, 1, 0], ["x", "y"])
    assert containment_violation(out, square) <= 1e-9
    assert containment_violation(square, out) <= 1e-9


def test_fm_size_guard():
    p = Polyhedron(np.eye(30), np.ones(30), [f"v{i}" for i in range(30)])
    with pytest.raises(ProjectionTooLarge):
        fm_project(p, ["v0"])


def test_fm_recovers_bigm_on_random_instance():
    from psplit.reformulate import polyhedron_from_model

    p = random_affine_problem(11, n=2)
    lifted = polyhedron_from_model(compile_psplit(p, 1))
    bigm = compile_bigm(p)
    proj = fm_project(lifted, [nm for nm in lifted.names if nm not in set(bigm.names)])
    target = polyhedron_from_model(bigm)
    assert containment_violation(proj, target) <= 1e-7
    assert containment_violation(target, proj) <= 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_every_formulation_contains_integer_points(seed):
    p = random_affine_problem(seed, n=3)
    rng = np.random.default_rng(seed)
    models = [compile_bigm(p), compile_hull_linear(p), compile_two_term(p, 2)]
    models += [compile_psplit(p, P, share_alpha=s) for P in (1, 2, 3) for s in (False, "signed")]
    for x in rng.uniform(-5, 5, size=(60, 3)):
        pat = satisfied_pattern(p, x)
        if pat is None:
            continue
        for m in models:
            assert m.max_violation(lift_point(m, p, x, pat)) <= 1e-8, m.formulation
