"""Variable partitionings I_1..I_P used to split disjunct constraints."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Disjunction, DisjunctiveProblem


class PartitionError(ValueError):
    pass


class OverlapError(PartitionError):
    pass


class GapError(PartitionError):
    pass


class EmptyClassError(PartitionError):
    pass


@dataclass(frozen=True)
class Partition:
    classes: tuple[tuple[int, ...], ...]

    @classmethod
    def of(cls, classes: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(tuple(int(i) for i in c) for c in classes))

    @property
    def P(self) -> int:
        return len(self.classes)

    @property
    def universe(self) -> tuple[int, ...]:
        return tuple(sorted(i for c in self.classes for i in c))

    def class_of(self) -> dict[int, int]:
        return {i: s for s, c in enumerate(self.classes) for i in c}

    def restrict(self, variables: Iterable[int]) -> "Partition":
        """Drop variables outside ``variables`` and any class left empty."""
        keep = set(variables)
        classes = [tuple(i for i in c if i in keep) for c in self.classes]
        return Partition(tuple(c for c in classes if c))

    def refines(self, coarser: "Partition") -> bool:
        owner = coarser.class_of()
        return all(len({owner.get(i) for i in c}) == 1 for c in self.classes)

    def __str__(self) -> str:
        return format_partition(self)


def _check_p(n: int, P: int):
    if P < 1 or P > n:
        raise PartitionError(f"need 1 <= P <= n, got P={P}, n={n}")


def _chunk(items: Sequence, P: int) -> list[list]:
    n = len(items)
    base, extra = divmod(n, P)
    out, pos = [], 0
    for s in range(P):
        size = base + (1 if s < extra else 0)
        out.append(list(items[pos:pos + size]))
        pos += size
    return out


def partition_uniform(n: int | Sequence[int], P: int) -> Partition:
    """Contiguous blocks in index order; sizes differ by at most one.

    ``n`` may be a count (universe ``0..n-1``) or an explicit ordered index list.
    """
    items = list(range(n)) if isinstance(n, int) else list(n)
    _check_p(len(items), P)
    return Partition.of(_chunk(items, P))


def coefficient_key(d: Disjunction, lower=None, upper=None) -> dict[int, float]:
    """Per-variable magnitude ``max |a| + |q| * span`` over all disjunct constraints."""
    key: dict[int, float] = {}
    for dj in d.disjuncts:
        for con in dj.constraints:
            for t in con.lhs.terms:
                span = 1.0 if lower is None else float(upper[t.var]) - float(lower[t.var])
                val = abs(t.lin) + abs(t.quad) * span
                key[t.var] = max(key.get(t.var, 0.0), val)
    return key


def partition_by_coefficient(d: Disjunction, P: int, lower=None, upper=None) -> Partition:
    """Sort the disjunction's variables by decreasing coefficient magnitude and chunk.

    Variables with similar magnitudes end up in the same class.  Ties keep
    index order.  Without a box the span factor for quadratic terms is 1.
    """
    key = coefficient_key(d, lower, upper)
    order = sorted(d.support, key=lambda i: (-key[i], i))
    _check_p(len(order), P)
    return Partition.of(sorted(c) for c in _chunk(order, P))


def validate_partition(p: Partition, n: int | Iterable[int]) -> None:
    """Raise unless ``p`` covers the universe exactly once with nonempty classes."""
    universe = set(range(n)) if isinstance(n, int) else set(n)
    seen: dict[int, int] = {}
    for s, c in enumerate(p.classes):
        if not c:
            raise EmptyClassError(f"class {s} is empty")
        for i in c:
            if i in seen:
                raise OverlapError(f"variable {i} appears in classes {seen[i]} and {s}")
            if i not in universe:
                raise GapError(f"variable {i} is outside the universe")
            seen[i] = s
    missing = sorted(universe - seen.keys())
    if missing:
        raise GapError(f"variables not covered: {missing}")


def parse_partition(text: str) -> Partition:
    """Parse the CLI literal ``"0,1|2,3"``."""
    try:
        classes = []
        for chunk in text.split("|"):
            chunk = chunk.strip()
            if not chunk:
                raise PartitionError(f"empty class in {text!r}")
            classes.append(tuple(int(tok) for tok in chunk.split(",")))
    except ValueError as exc:
        raise PartitionError(f"bad partition literal {text!r}") from exc
    return Partition(tuple(classes))


def format_partition(p: Partition) -> str:
    return "|".join(",".join(str(i) for i in c) for c in p.classes)


def grouped_partition(problem: DisjunctiveProblem, d: Disjunction, P: int) -> Partition:
    """Uniform partition of a disjunction's support honoring ``problem.groups``.

    Variables with the same group key stay together; distinct keys are chunked
    in order of first appearance.  Variables whose key is None join the last
    class.  Without group metadata this is ``partition_uniform`` on the support.
    """
    support = d.support
    if not problem.groups:
        return partition_uniform(support, min(P, len(support)))
    keys: list = []
    members: dict = {}
    loose = []
    for v in support:
        g = problem.groups[v]
        if g is None:
            loose.append(v)
            continue
        if g not in members:
            keys.append(g)
            members[g] = []
        members[g].append(v)
    if not keys:
        return partition_uniform(support, min(P, len(support)))
    P = min(P, len(keys))
    classes = [[v for g in block for v in members[g]] for block in _chunk(keys, P)]
    classes[-1].extend(loose)
    return Partition.of(sorted(c) for c in classes)


def refinement_chain(items: Sequence[int], sizes: Sequence[int]) -> list[Partition]:
    """Nested partitions with the requested class counts, each refining the last.

    Refinement splits the largest class (lowest position first) in halves, so
    every partition in the chain is a refinement of its predecessor.
    """
    items = list(items)
    out = []
    classes = [items]
    for P in sizes:
        _check_p(len(items), P)
        if P < len(classes):
            raise PartitionError("chain sizes must be nondecreasing")
        while len(classes) < P:
            s = max(range(len(classes)), key=lambda j: (len(classes[j]), -j))
            c = classes[s]
            h = (len(c) + 1) // 2
            classes[s:s + 1] = [c[:h], c[h:]]
        out.append(Partition.of(classes))
    return out


def resolve_partitions(problem: DisjunctiveProblem, spec, strategy: str = "uniform") -> list[Partition]:
    """One partition per disjunction from an int P, a Partition or a list.

    A global Partition is restricted to each disjunction's support.  An int
    ``P`` is capped at each disjunction's support size.
    """
    out = []
    for j, d in enumerate(problem.disjunctions):
        if isinstance(spec, int):
            P = min(spec, len(d.support))
            if strategy == "coefficient":
                p = partition_by_coefficient(d, P, problem.lower, problem.upper)
            elif strategy == "uniform":
                p = grouped_partition(problem, d, P)
            else:
                raise PartitionError(f"unknown strategy {strategy!r}")
        elif isinstance(spec, Partition):
            p = spec.restrict(d.support)
        else:
            p = spec[j]
        validate_partition(p, d.support)
        out.append(p)
    return out
