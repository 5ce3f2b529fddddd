"""Disjunctive problem data model, evaluation and validation.

A problem is a box of continuous variables, optional global linear rows, a
linear objective and a list of disjunctions.  Every disjunct constraint is a
convex additively separable function ``sum_i q_i (x_i - c_i)**2 + a_i x_i +
const`` compared against a right-hand side.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FEAS_TOL = 1e-7

SENSES = ("<=", ">=", "=")


class ModelError(ValueError):
    """Raised for structurally invalid problem data."""


@dataclass(frozen=True)
class UnivariateTerm:
    var: int
    quad: float = 0.0
    center: float = 0.0
    lin: float = 0.0

    def __post_init__(self):
        if self.var < 0:
            raise ModelError(f"negative variable index {self.var}")

    @property
    def is_affine(self) -> bool:
        return self.quad == 0.0

    def __call__(self, x: float) -> float:
        return self.quad * (x - self.center) ** 2 + self.lin * x

    def derivative(self, x: float) -> float:
        return 2.0 * self.quad * (x - self.center) + self.lin

    def expanded(self) -> tuple[float, float, float]:
        """Return (x^2 coefficient, x coefficient, constant)."""
        q, c = self.quad, self.center
        return q, self.lin - 2.0 * q * c, q * c * c

    def scaled(self, factor: float) -> "UnivariateTerm":
        return UnivariateTerm(self.var, self.quad * factor, self.center, self.lin * factor)


def _merge_terms(terms: list[UnivariateTerm]) -> tuple[tuple[UnivariateTerm, ...], float]:
    """Merge terms sharing a variable; returns canonical terms and a constant shift."""
    by_var: dict[int, list[UnivariateTerm]] = {}
    for t in terms:
        by_var.setdefault(t.var, []).append(t)
    out = []
    shift = 0.0
    for var in sorted(by_var):
        group = by_var[var]
        if len(group) == 1:
            if group[0].quad != 0.0 or group[0].lin != 0.0:
                out.append(group[0])
            continue
        q2 = q1 = q0 = 0.0
        for t in group:
            e2, e1, e0 = t.expanded()
            q2, q1, q0 = q2 + e2, q1 + e1, q0 + e0
        if q2 == 0.0 and q1 == 0.0:
            shift += q0
            continue
        out.append(UnivariateTerm(var, q2, 0.0, q1))
        shift += q0
    return tuple(out), shift


@dataclass(frozen=True)
class SeparableFunction:
    """``constant + sum(term(x[term.var]))`` with at most one term per variable."""

    terms: tuple[UnivariateTerm, ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        seen = set()
        for t in self.terms:
            if t.var in seen:
                raise ModelError(f"duplicate term for variable {t.var}; use SeparableFunction.build")
            seen.add(t.var)

    @classmethod
    def build(cls, terms: Iterable[UnivariateTerm], constant: float = 0.0) -> "SeparableFunction":
        terms = list(terms)
        merged, shift = _merge_terms(terms)
        return cls(merged, constant + shift)

    @classmethod
    def linear(cls, coefs: dict[int, float] | Sequence[float], constant: float = 0.0) -> "SeparableFunction":
        items = coefs.items() if isinstance(coefs, dict) else enumerate(coefs)
        return cls.build((UnivariateTerm(int(i), 0.0, 0.0, float(a)) for i, a in items if a != 0.0), constant)

    @classmethod
    def squared_distance(cls, variables: Sequence[int], point: Sequence[float], scale: float = 1.0):
        return cls.build(UnivariateTerm(int(v), scale, float(p), 0.0) for v, p in zip(variables, point))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(t.var for t in self.terms)

    @property
    def is_affine(self) -> bool:
        return all(t.is_affine for t in self.terms)

    def restrict(self, variables: Iterable[int]) -> "SeparableFunction":
        keep = set(variables)
        return SeparableFunction(tuple(t for t in self.terms if t.var in keep), 0.0)

    def __add__(self, other: "SeparableFunction") -> "SeparableFunction":
        return SeparableFunction.build(self.terms + other.terms, self.constant + other.constant)

    def scaled(self, factor: float) -> "SeparableFunction":
        return SeparableFunction(tuple(t.scaled(factor) for t in self.terms), self.constant * factor)

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def gradient_terms(self, x) -> dict[int, float]:
        return {t.var: t.derivative(float(x[t.var])) for t in self.terms}


def evaluate(f: SeparableFunction, x) -> float:
    """Value of ``f`` at the point ``x``."""
    total = f.constant
    for t in f.terms:
        xi = float(x[t.var])
        total += t.quad * (xi - t.center) ** 2 + t.lin * xi
    return total


@dataclass(frozen=True)
class DisjunctConstraint:
    lhs: SeparableFunction
    rhs: float

    def violation(self, x) -> float:
        return evaluate(self.lhs, x) - self.rhs

    @property
    def normalized_rhs(self) -> float:
        """Right-hand side after moving the function constant across."""
        return self.rhs - self.lhs.constant


@dataclass(frozen=True)
class Disjunct:
    constraints: tuple[DisjunctConstraint, ...]

    def satisfied(self, x, tol: float = FEAS_TOL) -> bool:
        return all(c.violation(x) <= tol for c in self.constraints)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({v for c in self.constraints for v in c.lhs.support}))


@dataclass(frozen=True)
class Disjunction:
    disjuncts: tuple[Disjunct, ...]
    name: str = ""

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({v for d in self.disjuncts for v in d.support}))

    @property
    def is_affine(self) -> bool:
        return all(c.lhs.is_affine for d in self.disjuncts for c in d.constraints)


@dataclass(frozen=True)
class LinearRow:
    """Sparse linear row ``sum coefs[i] * x[i]  sense  rhs``."""

    coefs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ModelError(f"bad sense {self.sense!r}")

    @classmethod
    def make(cls, coefs: dict[int, float], sense: str, rhs: float, name: str = "") -> "LinearRow":
        return cls(tuple(sorted((int(i), float(a)) for i, a in coefs.items() if a != 0.0)), sense, float(rhs), name)

    def activity(self, x) -> float:
        return sum(a * float(x[i]) for i, a in self.coefs)

    def violation(self, x) -> float:
        act = self.activity(x)
        if self.sense == "<=":
            return act - self.rhs
        if self.sense == ">=":
            return self.rhs - act
        return abs(act - self.rhs)


@dataclass(frozen=True)
class LogicRow:
    """Linear row over disjunct indicators: terms are (disjunction, disjunct, coef)."""

    terms: tuple[tuple[int, int, float], ...]
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ModelError(f"bad sense {self.sense!r}")


@dataclass(frozen=True)
class DisjunctiveProblem:
    n: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    objective: tuple[float, ...] = ()
    sense: str = "min"
    objective_constant: float = 0.0
    globals: tuple[LinearRow, ...] = ()
    disjunctions: tuple[Disjunction, ...] = ()
    logic: tuple[LogicRow, ...] = ()
    names: tuple[str, ...] = ()
    # variables sharing a group key are kept together by default partitioning;
    # None means "no preference" and such variables go to the last class
    groups: tuple[int | None, ...] = ()
    name: str = ""

    def __post_init__(self):
        if not self.objective:
            object.__setattr__(self, "objective", (0.0,) * self.n)
        if len(self.lower) != self.n or len(self.upper) != self.n:
            raise ModelError("bounds length does not match n")
        if self.objective and len(self.objective) != self.n:
            raise ModelError("objective length does not match n")
        if self.sense not in ("min", "max"):
            raise ModelError(f"bad objective sense {self.sense!r}")
        if self.names and len(self.names) != self.n:
            raise ModelError("names length does not match n")
        if self.groups and len(self.groups) != self.n:
            raise ModelError("groups length does not match n")

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.objective, float)

    @property
    def lb(self) -> np.ndarray:
        return np.asarray(self.lower, float)

    @property
    def ub(self) -> np.ndarray:
        return np.asarray(self.upper, float)

    def var_name(self, i: int) -> str:
        return self.names[i] if self.names else f"x{i}"

    def with_objective(self, c: Sequence[float], sense: str = "min", constant: float = 0.0) -> "DisjunctiveProblem":
        return replace(self, objective=tuple(float(v) for v in c), sense=sense, objective_constant=float(constant))

    def with_box(self, lower: Sequence[float], upper: Sequence[float]) -> "DisjunctiveProblem":
        return replace(self, lower=tuple(map(float, lower)), upper=tuple(map(float, upper)))

    @property
    def has_global_rows(self) -> bool:
        return bool(self.globals)


def disjunction_satisfied(d: Disjunction, x, tol: float = FEAS_TOL) -> bool:
    """True iff some disjunct of ``d`` holds at ``x`` within ``tol``."""
    return any(dj.satisfied(x, tol) for dj in d.disjuncts)


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_if_errors(self):
        if self.errors:
            raise ModelError("; ".join(self.errors))


def validate(problem: DisjunctiveProblem, check_feasibility: bool = True) -> ValidationReport:
    """Check the structural assumptions the formulations rely on.

    Errors: non-finite or inverted bounds, negative quadratic coefficients,
    out-of-range variable indices, empty constraint lists and disjuncts that
    are infeasible over the box.  Warnings: disjuncts with at least ``n/2``
    constraints, where splitting is unlikely to pay off, and single-disjunct
    disjunctions.
    """
    rep = ValidationReport()
    n = problem.n
    for i, (lo, hi) in enumerate(zip(problem.lower, problem.upper)):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            rep.errors.append(f"unbounded variable {problem.var_name(i)}")
        elif lo > hi:
            rep.errors.append(f"empty bounds on {problem.var_name(i)}: [{lo}, {hi}]")
    for r in problem.globals:
        for i, _ in r.coefs:
            if not 0 <= i < n:
                rep.errors.append(f"global row {r.name or '?'} references variable {i} outside [0, {n})")
    structural_ok = True
    for j, d in enumerate(problem.disjunctions):
        if len(d.disjuncts) == 0:
            rep.errors.append(f"disjunction {j} has no disjuncts")
            structural_ok = False
            continue
        if len(d.disjuncts) == 1:
            rep.warnings.append(f"disjunction {j} has a single disjunct")
        for l, dj in enumerate(d.disjuncts):
            if not dj.constraints:
                rep.errors.append(f"disjunct {l} of disjunction {j} has no constraints")
                structural_ok = False
            for k, con in enumerate(dj.constraints):
                for t in con.lhs.terms:
                    if not 0 <= t.var < n:
                        rep.errors.append(
                            f"disjunction {j} disjunct {l} constraint {k} references variable {t.var} outside [0, {n})"
                        )
                        structural_ok = False
                    if t.quad < 0:
                        rep.errors.append(
                            f"negative quad_coeff {t.quad} on {problem.var_name(t.var)} "
                            f"(disjunction {j} disjunct {l} constraint {k})"
                        )
                        structural_ok = False
                    if not all(math.isfinite(v) for v in (t.quad, t.center, t.lin)):
                        rep.errors.append(f"non-finite coefficient in disjunction {j} disjunct {l}")
                        structural_ok = False
            if len(dj.constraints) >= n / 2:
                rep.warnings.append(
                    f"disjunct {l} of disjunction {j} has {len(dj.constraints)} constraints for {n} variables; "
                    "splitting pays off only with few constraints per disjunct"
                )
    for r in problem.logic:
        for j, l, _ in r.terms:
            if not (0 <= j < len(problem.disjunctions) and 0 <= l < len(problem.disjunctions[j].disjuncts)):
                rep.errors.append(f"logic row {r.name or '?'} references missing disjunct ({j}, {l})")
    if check_feasibility and rep.ok and structural_ok:
        from .solver.relax import convex_feasible

        for j, d in enumerate(problem.disjunctions):
            for l, dj in enumerate(d.disjuncts):
                if not convex_feasible(problem, dj.constraints):
                    rep.errors.append(f"disjunct {l} of disjunction {j} is empty over the domain")
    return rep


# --------------------------------------------------------------------------
# serialization


def _term_to_json(t: UnivariateTerm) -> dict:
    rec = {"var": t.var}
    if t.quad:
        rec["quad"] = t.quad
        if t.center:
            rec["center"] = t.center
    if t.lin:
        rec["lin"] = t.lin
    return rec


def _row_to_json(r: LinearRow) -> dict:
    return {"name": r.name, "coefs": [[i, a] for i, a in r.coefs], "sense": r.sense, "rhs": r.rhs}


def problem_to_dict(p: DisjunctiveProblem) -> dict:
    return {
        "format": "psplit-problem/1",
        "name": p.name,
        "vars": [
            {"name": p.var_name(i), "lower": p.lower[i], "upper": p.upper[i],
             **({"group": p.groups[i]} if p.groups else {})}
            for i in range(p.n)
        ],
        "objective": {"sense": p.sense, "constant": p.objective_constant, "coefs": list(p.c)},
        "globals": [_row_to_json(r) for r in p.globals],
        "disjunctions": [
            {
                "name": d.name,
                "disjuncts": [
                    {
                        "constraints": [
                            {
                                "terms": [_term_to_json(t) for t in c.lhs.terms],
                                "constant": c.lhs.constant,
                                "rhs": c.rhs,
                            }
                            for c in dj.constraints
                        ]
                    }
                    for dj in d.disjuncts
                ],
            }
            for d in p.disjunctions
        ],
        "logic": [
            {"name": r.name, "terms": [list(t) for t in r.terms], "sense": r.sense, "rhs": r.rhs} for r in p.logic
        ],
    }


def problem_from_dict(doc: dict) -> DisjunctiveProblem:
    try:
        vars_ = doc["vars"]
        n = len(vars_)
        names = tuple(v.get("name", f"x{i}") for i, v in enumerate(vars_))
        has_groups = any("group" in v for v in vars_)
        groups = tuple(v.get("group") for v in vars_) if has_groups else ()
        obj = doc.get("objective", {})
        coefs = tuple(float(a) for a in obj.get("coefs", [0.0] * n))
        globals_ = tuple(
            LinearRow(tuple((int(i), float(a)) for i, a in r["coefs"]), r["sense"], float(r["rhs"]), r.get("name", ""))
            for r in doc.get("globals", [])
        )
        disjunctions = []
        for d in doc.get("disjunctions", []):
            djs = []
            for dj in d["disjuncts"]:
                cons = []
                for c in dj["constraints"]:
                    terms = tuple(
                        UnivariateTerm(int(t["var"]), float(t.get("quad", 0.0)), float(t.get("center", 0.0)),
                                       float(t.get("lin", 0.0)))
                        for t in c["terms"]
                    )
                    cons.append(DisjunctConstraint(SeparableFunction(terms, float(c.get("constant", 0.0))),
                                                   float(c["rhs"])))
                djs.append(Disjunct(tuple(cons)))
            disjunctions.append(Disjunction(tuple(djs), d.get("name", "")))
        logic = tuple(
            LogicRow(tuple((int(a), int(b), float(c)) for a, b, c in r["terms"]), r["sense"], float(r["rhs"]),
                     r.get("name", ""))
            for r in doc.get("logic", [])
        )
        default_names = all(nm == f"x{i}" for i, nm in enumerate(names))
        return DisjunctiveProblem(
            n=n,
            lower=tuple(float(v["lower"]) for v in vars_),
            upper=tuple(float(v["upper"]) for v in vars_),
            objective=coefs,
            sense=obj.get("sense", "min"),
            objective_constant=float(obj.get("constant", 0.0)),
            globals=globals_,
            disjunctions=tuple(disjunctions),
            logic=logic,
            names=() if default_names else names,
            groups=groups,
            name=doc.get("name", ""),
        )
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed problem document: {exc!r}") from exc


def save_problem(p: DisjunctiveProblem, path) -> None:
    text = json.dumps(problem_to_dict(p), indent=1, sort_keys=False)
    Path(path).write_text(text + "\n")


def load_problem(path) -> DisjunctiveProblem:
    return problem_from_dict(json.loads(Path(path).read_text()))


def dumps_problem(p: DisjunctiveProblem) -> str:
    return json.dumps(problem_to_dict(p), indent=1)
