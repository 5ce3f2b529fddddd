import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psplit.instances import make_ex1, make_ex2
from psplit.model import (
    Disjunct,
    DisjunctConstraint,
    Disjunction,
    DisjunctiveProblem,
    LinearRow,
    ModelError,
    SeparableFunction,
    UnivariateTerm,
    disjunction_satisfied,
    dumps_problem,
    evaluate,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
    validate,
)


def squares(n=4):
    return SeparableFunction.build(UnivariateTerm(i, 1.0) for i in range(n))


def neg_sum(n=4):
    return SeparableFunction.linear({i: -1.0 for i in range(n)})


@pytest.mark.parametrize("f, x, want", [
    (squares(), (0, 0, 0, 0), 0.0),
    (squares(), (1, 1, 1, 1), 4.0),
    (neg_sum(), (4, 4, 4, 4), -16.0),
])
def test_evaluate_by_hand(f, x, want):
    assert evaluate(f, np.array(x, float)) == want


def test_term_form_and_expansion():
    t = UnivariateTerm(0, 2.0, 1.5, -3.0)
    q2, q1, q0 = t.expanded()
    for x in (-2.0, 0.0, 0.7, 4.0):
        assert math.isclose(t(x), q2 * x * x + q1 * x + q0, abs_tol=1e-12)


def test_build_merges_terms_on_one_variable():
    f = SeparableFunction.build([UnivariateTerm(0, 1.0, 0.0, 0.0), UnivariateTerm(0, 0.0, 0.0, 2.0)], 1.0)
    assert len(f.terms) == 1
    for x in (-1.0, 0.5, 3.0):
        assert math.isclose(f(np.array([x])), x * x + 2 * x + 1.0, abs_tol=1e-12)


def test_duplicate_terms_rejected():
    with pytest.raises(ModelError):
        SeparableFunction((UnivariateTerm(0, 1.0), UnivariateTerm(0, 0.0, 0.0, 1.0)))


@pytest.mark.parametrize("x, want", [((0.5, 0, 0, 0), True), ((4, 4, 4, 4), True), ((2, 2, 2, 2), False)])
def test_ex1_membership(x, want):
    assert disjunction_satisfied(make_ex1().disjunctions[0], np.array(x, float), 1e-9) is want


def test_validate_ex1_clean():
    rep = validate(make_ex1())
    assert rep.errors == [] and rep.warnings == []


def test_validate_unbounded_variable():
    p = make_ex1().with_box([-4] * 4, [math.inf, 4, 4, 4])
    assert any("unbounded variable" in e for e in validate(p).errors)


def test_validate_many_constraints_warns():
    lin = lambda a, b: DisjunctConstraint(SeparableFunction.linear({0: a, 1: b}), 1.0)
    d = Disjunction((Disjunct((lin(1, 0), lin(0, 1), lin(1, 1))), Disjunct((lin(-1, 0),))))
    p = DisjunctiveProblem(n=2, lower=(0, 0), upper=(1, 1), disjunctions=(d,))
    rep = validate(p)
    assert rep.errors == [] and rep.warnings


def test_validate_negative_quadratic_and_empty_disjunct():
    bad = DisjunctConstraint(SeparableFunction((UnivariateTerm(0, -1.0),)), 0.0)
    empty = DisjunctConstraint(SeparableFunction.linear({0: 1.0}), -10.0)
    ok = DisjunctConstraint(SeparableFunction.linear({0: 1.0}), 0.0)
    p = DisjunctiveProblem(n=1, lower=(0,), upper=(1,), disjunctions=(Disjunction((Disjunct((bad,)), Disjunct((ok,)))),))
    assert any("negative quad_coeff" in e for e in validate(p).errors)
    p = DisjunctiveProblem(n=1, lower=(0,), upper=(1,), disjunctions=(Disjunction((Disjunct((empty,)), Disjunct((ok,)))),))
    assert any("empty" in e for e in validate(p).errors)


@pytest.mark.parametrize("make", [make_ex1, make_ex2])
def test_json_round_trip(make, tmp_path):
    p = make(objective=(1.0, -2.0, 0.5, 0.0))
    path = tmp_path / "p.json"
    save_problem(p, path)
    assert load_problem(path) == p
    assert problem_from_dict(problem_to_dict(p)) == p
    assert dumps_problem(p) == dumps_problem(load_problem(path))


def test_globals_round_trip():
    p = DisjunctiveProblem(n=2, lower=(0, 0), upper=(1, 1), globals=(LinearRow.make({0: 1, 1: 1}, "<=", 1.0, "cap"),),
                           disjunctions=make_ex2().disjunctions[:0])
    assert problem_from_dict(problem_to_dict(p)) == p


coef = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=1, max_size=6), coef, st.data())
def test_affine_evaluation_exact(a, const, data):
    x = np.array(data.draw(st.lists(coef, min_size=len(a), max_size=len(a))))
    f = SeparableFunction.linear({i: v for i, v in enumerate(a)}, const)
    ref = sum(ai * xi for ai, xi in zip(a, x)) + const
    assert abs(evaluate(f, x) - ref) <= 1e-12 * (1 + sum(abs(ai * xi) for ai, xi in zip(a, x)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_membership_matches_brute_force_on_grid(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    def con():
        terms = [UnivariateTerm(i, float(rng.choice([0.0, 1.0])), float(rng.normal()), float(rng.normal()))
                 for i in range(n)]
        return DisjunctConstraint(SeparableFunction.build(terms), float(rng.normal()))
    d = Disjunction(tuple(Disjunct(tuple(con() for _ in range(2))) for _ in range(2)))
    for x in itertools.product(np.linspace(-2, 2, 5), repeat=n):
        x = np.array(x)
        brute = any(all(sum(t(x[t.var]) for t in c.lhs.terms) + c.lhs.constant <= c.rhs + 1e-9
                        for c in dj.constraints) for dj in d.disjuncts)
        assert disjunction_satisfied(d, x, 1e-9) == brute
