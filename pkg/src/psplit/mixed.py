"""Compiled mixed-integer model: variables, linear rows and convex epigraph rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import LinearRow, SeparableFunction, UnivariateTerm


@dataclass(frozen=True)
class Epigraph:
    """Convex row ``f(y) <= y[var]`` (``f`` has at least one quadratic term)."""

    f: SeparableFunction
    var: int
    name: str = ""
    role: str = "epigraph"

    def violation(self, y) -> float:
        return self.f(y) - float(y[self.var])


@dataclass
class MixedModel:
    names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    roles: list[str] = field(default_factory=list)
    binaries: list[int] = field(default_factory=list)
    rows: list[LinearRow] = field(default_factory=list)
    row_roles: list[str] = field(default_factory=list)
    epigraphs: list[Epigraph] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    sense: str = "min"
    # lambda indices per disjunction, in disjunct order
    lambdas: list[list[int]] = field(default_factory=list)
    n_original: int = 0
    formulation: str = ""
    meta: dict = field(default_factory=dict)

    # ----------------------------------------------------------- building

    def add_var(self, name: str, lb: float, ub: float, role: str = "x", binary: bool = False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name {name}")
        idx = len(self.names)
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.roles.append(role)
        self._index[name] = idx
        if binary:
            self.binaries.append(idx)
        return idx

    def add_row(self, coefs: dict[int, float], sense: str, rhs: float, name: str = "", role: str = "row") -> int:
        row = LinearRow.make(coefs, sense, rhs, name or f"r{len(self.rows)}")
        self.rows.append(row)
        self.row_roles.append(role)
        return len(self.rows) - 1

    def add_epigraph(self, f: SeparableFunction, var: int, equality: bool = False, name: str = "",
                     role: str = "epigraph"):
        """Add ``f <= var``; affine ``f`` becomes a linear row (an equality when requested)."""
        name = name or f"e{len(self.rows) + len(self.epigraphs)}"
        if f.is_affine:
            coefs: dict[int, float] = {}
            for t in f.terms:
                coefs[t.var] = coefs.get(t.var, 0.0) + t.lin
            coefs[var] = coefs.get(var, 0.0) - 1.0
            self.add_row(coefs, "=" if equality else "<=", -f.constant, name, role)
        else:
            if equality:
                raise ValueError("nonlinear epigraph rows cannot be equalities")
            self.epigraphs.append(Epigraph(f, var, name, role))

    @property
    def _index(self) -> dict[str, int]:
        idx = self.__dict__.get("_name_index")
        if idx is None or len(idx) != len(self.names):
            idx = {nm: i for i, nm in enumerate(self.names)}
            self.__dict__["_name_index"] = idx
        return idx

    def index(self, name: str) -> int:
        return self._index[name]

    # --------------------------------------------------------- inspection

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_continuous(self) -> int:
        return self.n_vars - len(self.binaries)

    @property
    def is_affine(self) -> bool:
        return not self.epigraphs

    def counts(self) -> dict[str, int]:
        return {
            "variables": self.n_vars,
            "continuous": self.n_continuous,
            "binary": len(self.binaries),
            "linear_rows": len(self.rows),
            "epigraph_rows": len(self.epigraphs),
            "extra_continuous": self.n_continuous - self.n_original,
        }

    def c(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for i, a in self.objective.items():
            c[i] = a
        return c

    def evaluate_objective(self, y) -> float:
        return self.objective_constant + sum(a * float(y[i]) for i, a in self.objective.items())

    def max_violation(self, y, integral: bool = True) -> float:
        """Largest violation of bounds, rows, epigraphs (and integrality when asked)."""
        y = np.asarray(y, float)
        viol = max(0.0, float(np.max(np.asarray(self.lb) - y, initial=0.0)),
                   float(np.max(y - np.asarray(self.ub), initial=0.0)))
        for r in self.rows:
            viol = max(viol, r.violation(y))
        for e in self.epigraphs:
            viol = max(viol, e.violation(y))
        if integral:
            for b in self.binaries:
                viol = max(viol, abs(y[b] - round(y[b])))
        return viol

    def linear_arrays(self):
        """Dense (A, row_lo, row_hi) for the linear rows."""
        A = np.zeros((len(self.rows), self.n_vars))
        lo = np.empty(len(self.rows))
        hi = np.empty(len(self.rows))
        for i, r in enumerate(self.rows):
            for j, a in r.coefs:
                A[i, j] += a
            lo[i] = r.rhs if r.sense in (">=", "=") else -np.inf
            hi[i] = r.rhs if r.sense in ("<=", "=") else np.inf
        return A, lo, hi

    def x_part(self, y) -> np.ndarray:
        return np.asarray(y, float)[: self.n_original]


def quad_parts(f: SeparableFunction) -> tuple[list[UnivariateTerm], dict[int, float], float]:
    """Split ``f`` into quadratic terms, the linear coefficient map and constant."""
    quads, lin = [], {}
    for t in f.terms:
        if t.quad != 0.0:
            quads.append(t)
        if t.lin != 0.0:
            lin[t.var] = lin.get(t.var, 0.0) + t.lin
    return quads, lin, f.constant
