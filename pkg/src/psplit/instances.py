"""Constructors for the illustrative examples and the benchmark families."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .bounds import AlphaBounds, BoundEntry, USER, split_sums
from .model import (
    Disjunct,
    DisjunctConstraint,
    Disjunction,
    DisjunctiveProblem,
    LinearRow,
    LogicRow,
    ModelError,
    SeparableFunction,
    UnivariateTerm,
)
from .partition import Partition


def _disjunction(disjuncts, name="") -> Disjunction:
    return Disjunction(tuple(Disjunct(tuple(cons)) for cons in disjuncts), name)


def _lin(coefs: Sequence[float], rhs: float) -> DisjunctConstraint:
    return DisjunctConstraint(SeparableFunction.linear(list(coefs)), float(rhs))


# ---------------------------------------------------------------------------
# illustrative examples


def make_ex1(objective: Sequence[float] | None = None, sense: str = "min") -> DisjunctiveProblem:
    """Unit 4-ball or the half-space sum(x) >= 12, on the box [-4, 4]^4."""
    ball = DisjunctConstraint(SeparableFunction.build(UnivariateTerm(i, 1.0) for i in range(4)), 1.0)
    half = _lin([-1.0] * 4, -12.0)
    return DisjunctiveProblem(
        n=4, lower=(-4.0,) * 4, upper=(4.0,) * 4,
        objective=tuple(objective) if objective is not None else (),
        sense=sense, disjunctions=(_disjunction([[ball], [half]], "ex1"),), name="ex1",
    )


def make_ex2(objective: Sequence[float] | None = None, sense: str = "min") -> DisjunctiveProblem:
    """Two-constraint affine disjunction on [0, 5]^4."""
    d = _disjunction([
        [_lin([1, 1, 1, 1], 1.5), _lin([1.5, -1.2, 1, -1], -1)],
        [_lin([-1, -2, -1, -2], -26), _lin([-2, 1, 1, -0.5], -1)],
    ], "ex2")
    return DisjunctiveProblem(
        n=4, lower=(0.0,) * 4, upper=(5.0,) * 4,
        objective=tuple(objective) if objective is not None else (),
        sense=sense, disjunctions=(d,), name="ex2",
    )


def ex1_weak_bound_factor(P: int) -> float:
    """Interval factor obtained from the observation x_i >= -1 for P in {1, 2, 4}."""
    return 0.5 * P * P - 3.5 * P + 7.0


def ex1_weak_bounds(P: int, partition: Partition) -> AlphaBounds:
    """User bounds for ex1 derived with the weak interval argument."""
    f = ex1_weak_bound_factor(P)
    out = AlphaBounds()
    for s in range(partition.P):
        out.entries[(0, 0, s)] = BoundEntry(0.0, f * 16.0, USER)
        out.entries[(1, 0, s)] = BoundEntry(-4.0 * f, f, USER)
    return out


# ---------------------------------------------------------------------------
# random affine disjunctions


def random_affine_problem(seed: int, n: int = 4, n_disjuncts: int = 2, n_constraints: int = 1,
                          box: float = 5.0) -> DisjunctiveProblem:
    """Seeded affine disjunction on ``[-box, box]^n``; every disjunct is nonempty.

    Each disjunct is anchored at a random point so that it is feasible, with
    right-hand sides cutting through the box so that disjuncts are not trivial.
    """
    rng = np.random.default_rng(seed)
    disjuncts = []
    for _ in range(n_disjuncts):
        anchor = rng.uniform(-box, box, n)
        cons = []
        for _ in range(n_constraints):
            a = np.round(rng.normal(size=n), 3)
            a[np.abs(a) < 1e-3] = 0.5
            rhs = float(a @ anchor + rng.uniform(0.0, 0.5 * box))
            cons.append(_lin(a.tolist(), round(rhs, 6)))
        disjuncts.append(cons)
    c = np.round(rng.normal(size=n), 3)
    return DisjunctiveProblem(
        n=n, lower=(-box,) * n, upper=(box,) * n, objective=tuple(c.tolist()),
        disjunctions=(_disjunction(disjuncts, "rand"),), name=f"rand{seed}",
    )


# ---------------------------------------------------------------------------
# clustering


def make_clustering(points: Sequence[Sequence[float]], k: int) -> DisjunctiveProblem:
    """Exact k-means style clustering: minimize the sum of squared assignment distances.

    Variables: cluster centers ``c_j_d`` (data bounding box) followed by one
    ``r_i`` per point.  Each point contributes one disjunction over clusters.
    """
    pts = np.asarray(points, float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ModelError("points must be a nonempty 2-D array")
    m, dim = pts.shape
    if k < 1 or k > m:
        raise ModelError(f"need 1 <= k <= number of points, got k={k}, points={m}")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    rmax = max_pairwise_sq(pts)
    names, lower, upper, groups = [], [], [], []
    for j in range(k):
        for d in range(dim):
            names.append(f"c_{j}_{d}")
            lower.append(float(lo[d]))
            upper.append(float(hi[d]))
            groups.append(d)
    r0 = len(names)
    for i in range(m):
        names.append(f"r_{i}")
        lower.append(0.0)
        upper.append(rmax)
        groups.append(None)
    disjunctions = []
    for i in range(m):
        disjuncts = []
        for j in range(k):
            terms = [UnivariateTerm(j * dim + d, 1.0, float(pts[i, d])) for d in range(dim)]
            terms.append(UnivariateTerm(r0 + i, 0.0, 0.0, -1.0))
            disjuncts.append([DisjunctConstraint(SeparableFunction.build(terms), 0.0)])
        disjunctions.append(_disjunction(disjuncts, f"point{i}"))
    obj = [0.0] * r0 + [1.0] * m
    return DisjunctiveProblem(
        n=len(names), lower=tuple(lower), upper=tuple(upper), objective=tuple(obj),
        disjunctions=tuple(disjunctions), names=tuple(names), groups=tuple(groups), name=f"cluster{m}k{k}",
    )


def max_pairwise_sq(pts: np.ndarray, coords: Sequence[int] | None = None) -> float:
    sub = pts if coords is None else pts[:, list(coords)]
    diff = sub[:, None, :] - sub[None, :, :]
    return float(np.max(np.sum(diff * diff, axis=-1), initial=0.0))


def clustering_bounds(problem: DisjunctiveProblem, points, partitions: Sequence[Partition]) -> list[AlphaBounds]:
    """Data-driven split bounds: [0, largest squared distance in the split's coordinate subspace].

    A split holding ``r_i`` gets lower bound ``-r_max``.  These bounds hold at
    every optimal solution (centers lie in the convex hull of their points).
    """
    pts = np.asarray(points, float)
    dim = pts.shape[1]
    r_start = problem.n - len(pts)
    rmax = problem.upper[r_start]
    out = []
    for d, p in zip(problem.disjunctions, partitions):
        ab = AlphaBounds()
        for key, f in split_sums(d, p).items():
            coords = sorted({v % dim for v in f.support if v < r_start})
            has_r = any(v >= r_start for v in f.support)
            ub = max_pairwise_sq(pts, coords) if coords else 0.0
            ab.entries[key] = BoundEntry(-rmax if has_r else 0.0, ub, USER)
        out.append(ab)
    return out


def load_points_csv(path) -> list[list[float]]:
    """One point per row; a non-numeric first row is treated as a header."""
    rows = []
    with open(path, newline="") as fh:
        for line, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                if line == 1:
                    continue
                raise ValueError(f"{path}:{line}: non-numeric value in {rec}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: need a nonempty table with equal row lengths")
    return rows


# ---------------------------------------------------------------------------
# P-ball


def make_pball(n_balls: int, n_points: int, dim: int, seed: int = 0,
               centers: Sequence[Sequence[float]] | None = None) -> DisjunctiveProblem:
    """Place points in unit balls, one point per ball, minimizing the pairwise l1 distance.

    Ball centers are drawn uniformly from ``[0, 10]^dim`` unless given.  The
    l1 objective uses one difference variable per point pair and coordinate.
    """
    if n_points > n_balls:
        raise ModelError("more points than balls: at most one point per ball")
    if n_points < 1 or dim < 1:
        raise ModelError("need at least one point and one dimension")
    if centers is None:
        cen = np.round(np.random.default_rng(seed).uniform(0.0, 10.0, (n_balls, dim)), 6)
    else:
        cen = np.asarray(centers, float)
        if cen.shape != (n_balls, dim):
            raise ModelError(f"centers must have shape ({n_balls}, {dim})")
    lo = cen.min(axis=0) - 1.0
    hi = cen.max(axis=0) + 1.0
    names, lower, upper, groups = [], [], [], []
    for p in range(n_points):
        for d in range(dim):
            names.append(f"x_{p}_{d}")
            lower.append(float(lo[d]))
            upper.append(float(hi[d]))
            groups.append(d)
    rows, obj = [], [0.0] * len(names)
    for a, b in itertools.combinations(range(n_points), 2):
        for d in range(dim):
            t = len(names)
            names.append(f"t_{a}_{b}_{d}")
            lower.append(0.0)
            upper.append(float(hi[d] - lo[d]))
            groups.append(None)
            obj.append(1.0)
            xa, xb = a * dim + d, b * dim + d
            rows.append(LinearRow.make({t: 1.0, xa: -1.0, xb: 1.0}, ">=", 0.0, f"absp_{a}_{b}_{d}"))
            rows.append(LinearRow.make({t: 1.0, xa: 1.0, xb: -1.0}, ">=", 0.0, f"absn_{a}_{b}_{d}"))
    disjunctions = []
    for p in range(n_points):
        disjuncts = []
        for b in range(n_balls):
            f = SeparableFunction.build(UnivariateTerm(p * dim + d, 1.0, float(cen[b, d])) for d in range(dim))
            disjuncts.append([DisjunctConstraint(f, 1.0)])
        disjunctions.append(_disjunction(disjuncts, f"point{p}"))
    logic = tuple(
        LogicRow(tuple((p, b, 1.0) for p in range(n_points)), "<=", 1.0, f"ball{b}")
        for b in range(n_balls)
    ) if n_points > 1 else ()
    return DisjunctiveProblem(
        n=len(names), lower=tuple(lower), upper=tuple(upper), objective=tuple(obj),
        globals=tuple(rows), disjunctions=tuple(disjunctions), logic=logic,
        names=tuple(names), groups=tuple(groups), name=f"pball{n_balls}x{n_points}d{dim}s{seed}",
    )


# ---------------------------------------------------------------------------
# ReLU networks


@dataclass(frozen=True)
class Layer:
    w: tuple[tuple[float, ...], ...]  # (outputs, inputs)
    b: tuple[float, ...]
    act: str = "relu"

    @property
    def n_in(self) -> int:
        return len(self.w[0]) if self.w else 0

    @property
    def n_out(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class NetworkWeights:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network has no layers")
        for i, L in enumerate(self.layers):
            if L.act not in ("relu", "linear"):
                raise ValueError(f"layer {i}: unknown activation {L.act!r}")
            if len(L.w) != len(L.b):
                raise ValueError(f"layer {i}: {len(L.w)} weight rows but {len(L.b)} biases")
            if len({len(r) for r in L.w}) > 1:
                raise ValueError(f"layer {i}: ragged weight matrix")
            if i and L.n_in != self.layers[i - 1].n_out:
                raise ValueError(f"layer {i}: expects {L.n_in} inputs, previous layer gives {self.layers[i - 1].n_out}")

    @classmethod
    def from_arrays(cls, spec: Sequence[tuple]) -> "NetworkWeights":
        """Build from ``[(W, b, act), ...]`` with array-like ``W`` of shape (out, in)."""
        layers = []
        for W, b, act in spec:
            W = np.atleast_2d(np.asarray(W, float))
            layers.append(Layer(tuple(tuple(map(float, r)) for r in W), tuple(map(float, np.ravel(b))), act))
        return cls(tuple(layers))

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_in

    def forward(self, x) -> list[np.ndarray]:
        """Post-activation values of every layer (last entry is the output)."""
        out, h = [], np.asarray(x, float)
        for L in self.layers:
            z = np.asarray(L.w) @ h + np.asarray(L.b)
            h = np.maximum(z, 0.0) if L.act == "relu" else z
            out.append(h)
        return out


def random_network(sizes: Sequence[int], seed: int = 0) -> NetworkWeights:
    """Seeded network with relu hidden layers and a linear output layer."""
    rng = np.random.default_rng(seed)
    spec = []
    for i in range(len(sizes) - 1):
        W = np.round(rng.normal(0.0, 1.0, (sizes[i + 1], sizes[i])), 4)
        b = np.round(rng.normal(0.0, 0.5, sizes[i + 1]), 4)
        spec.append((W, b, "relu" if i < len(sizes) - 2 else "linear"))
    return NetworkWeights.from_arrays(spec)


def network_to_dict(nn: NetworkWeights) -> dict:
    return {"layers": [{"w": [list(r) for r in L.w], "b": list(L.b), "act": L.act} for L in nn.layers]}


def save_network(nn: NetworkWeights, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(nn), indent=1) + "\n")


def load_network(path) -> NetworkWeights:
    """Parse ``{"layers": [{"w": [[...]], "b": [...], "act": "relu"|"linear"}]}``."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise ValueError(f"{path}: expected an object with a 'layers' list")
    layers = []
    for i, rec in enumerate(doc["layers"]):
        try:
            w = tuple(tuple(float(v) for v in row) for row in rec["w"])
            b = tuple(float(v) for v in rec["b"])
            layers.append(Layer(w, b, rec.get("act", "relu")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: layer {i}: {exc}") from exc
    try:
        return NetworkWeights(tuple(layers))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def make_osif(nn: NetworkWeights, target_class: int, l1_budget: float) -> DisjunctiveProblem:
    """Maximize the target logit over inputs in [0, 1] with sum(x) <= l1_budget.

    Hidden relu nodes with a sign-indefinite pre-activation range become a
    disjunction [y = w.x + b] or [y = 0, w.x + b <= 0]; stable nodes are
    encoded directly.  Pre-activation ranges come from interval arithmetic.
    """
    *hidden, out = nn.layers
    for i, L in enumerate(hidden):
        if L.act != "relu":
            raise ModelError(f"hidden layer {i} is not relu")
    if not 0 <= target_class < out.n_out:
        raise ModelError(f"target class {target_class} outside 0..{out.n_out - 1}")
    n0 = nn.n_inputs
    names = [f"x_{i}" for i in range(n0)]
    lower, upper = [0.0] * n0, [1.0] * n0
    groups: list[int | None] = list(range(n0))
    rows = [LinearRow.make({i: 1.0 for i in range(n0)}, "<=", float(l1_budget), "l1_budget")]
    disjunctions = []
    prev = list(range(n0))
    for li, L in enumerate(hidden):
        cur = []
        for j in range(L.n_out):
            w, b = L.w[j], L.b[j]
            zl = b + sum(min(a * lower[v], a * upper[v]) for a, v in zip(w, prev))
            zu = b + sum(max(a * lower[v], a * upper[v]) for a, v in zip(w, prev))
            y = len(names)
            names.append(f"y_{li}_{j}")
            lower.append(0.0)
            upper.append(max(0.0, zu))
            groups.append(None)
            cur.append(y)
            wx = {v: a for a, v in zip(w, prev) if a != 0.0}
            if zu <= 0.0:
                continue  # always inactive: y fixed at 0 by its bounds
            if zl >= 0.0:
                coefs = {v: -a for v, a in wx.items()}
                coefs[y] = 1.0
                rows.append(LinearRow.make(coefs, "=", b, f"active_{li}_{j}"))
                continue
            y_minus_wx = {v: -a for v, a in wx.items()}
            y_minus_wx[y] = 1.0
            wx_minus_y = {v: -a for v, a in y_minus_wx.items()}
            active = [_lin_map(y_minus_wx, b), _lin_map(wx_minus_y, -b)]
            inactive = [_lin_map({y: 1.0}, 0.0), _lin_map(wx, -b)]
            disjunctions.append(_disjunction([active, inactive], f"relu_{li}_{j}"))
        prev = cur
    obj = [0.0] * len(names)
    for a, v in zip(out.w[target_class], prev):
        obj[v] += a
    return DisjunctiveProblem(
        n=len(names), lower=tuple(lower), upper=tuple(upper), objective=tuple(obj), sense="max",
        objective_constant=float(out.b[target_class]), globals=tuple(rows),
        disjunctions=tuple(disjunctions), names=tuple(names), groups=tuple(groups),
        name=f"osif_t{target_class}_b{l1_budget:g}",
    )


def _lin_map(coefs: dict[int, float], rhs: float) -> DisjunctConstraint:
    return DisjunctConstraint(SeparableFunction.build(UnivariateTerm(v, 0.0, 0.0, a) for v, a in sorted(coefs.items())), float(rhs))


def relu_pattern(problem: DisjunctiveProblem, x) -> list[int]:
    """Active (0) / inactive (1) disjunct index of every relu disjunction at ``x``."""
    return [0 if d.disjuncts[0].satisfied(x, 1e-6) else 1 for d in problem.disjunctions]
