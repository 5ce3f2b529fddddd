"""MPS export of the linear part of a model.

Field layout follows the fixed format column order; names longer than eight
characters widen the fields instead of being truncated, so the file also
reads as free-format MPS.
"""

from __future__ import annotations

from pathlib import Path

from ..mixed import MixedModel
from .lpfile import fmt


class UnsupportedModel(ValueError):
    pass


def _line(*fields: str) -> str:
    widths = (2, 10, 10, 25, 10, 25)
    out = " "
    for f, w in zip(fields, widths):
        out += f.ljust(w) + " "
    return out.rstrip()


def model_to_mps(m: MixedModel, name: str = "PSPLIT") -> str:
    if m.epigraphs:
        raise UnsupportedModel("MPS output covers linear models only; write an LP file (write_lp) for quadratic rows")
    lines = [f"NAME          {name}"]
    if m.sense == "max":
        lines += ["OBJSENSE", "    MAX"]
    lines.append("ROWS")
    lines.append(_line("N", "obj"))
    code = {"<=": "L", ">=": "G", "=": "E"}
    for r in m.rows:
        lines.append(_line(code[r.sense], r.name))
    # column-major coefficient lists
    cols: list[list[tuple[str, float]]] = [[] for _ in m.names]
    for i, a in sorted(m.objective.items()):
        cols[i].append(("obj", a))
    for r in m.rows:
        for i, a in r.coefs:
            cols[i].append((r.name, a))
    lines.append("COLUMNS")
    bins = set(m.binaries)
    in_int = False
    for i, nm in enumerate(m.names):
        if (i in bins) != in_int:
            marker = "INTORG" if not in_int else "INTEND"
            lines.append(_line("", "MARKER", "'MARKER'", f"'{marker}'"))
            in_int = not in_int
        entries = cols[i] or [("obj", 0.0)]
        for row, a in entries:
            lines.append(_line("", nm, row, fmt(a)))
    if in_int:
        lines.append(_line("", "MARKER", "'MARKER'", "'INTEND'"))
    lines.append("RHS")
    if m.objective_constant:
        lines.append(_line("", "RHS", "obj", fmt(-m.objective_constant)))
    for r in m.rows:
        if r.rhs != 0.0:
            lines.append(_line("", "RHS", r.name, fmt(r.rhs)))
    lines.append("BOUNDS")
    for i, nm in enumerate(m.names):
        lo, hi = m.lb[i], m.ub[i]
        if i in bins and lo == 0.0 and hi == 1.0:
            lines.append(_line("BV", "BND", nm))
        elif lo == hi:
            lines.append(_line("FX", "BND", nm, fmt(lo)))
        else:
            if lo == float("-inf"):
                lines.append(_line("MI", "BND", nm))
            elif lo != 0.0:
                lines.append(_line("LO", "BND", nm, fmt(lo)))
            if hi == float("inf"):
                lines.append(_line("PL", "BND", nm))
            else:
                lines.append(_line("UP", "BND", nm, fmt(hi)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def write_mps(m: MixedModel, path, name: str = "PSPLIT") -> None:
    """Write the linear model; models with epigraph rows are refused."""
    Path(path).write_text(model_to_mps(m, name))


def parse_mps(text: str) -> MixedModel:
    m = MixedModel()
    section = None
    rows: dict[str, tuple[str, dict[int, float]]] = {}
    row_order: list[str] = []
    rhs: dict[str, float] = {}
    obj_row = None
    in_int = False
    bounds_seen: set[int] = set()
    sense_map = {"L": "<=", "G": ">=", "E": "="}
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "OBJSENSE":
            m.sense = "max" if f[0].upper() in ("MAX", "MAXIMIZE") else "min"
        elif section == "ROWS":
            if f[0] == "N":
                obj_row = f[1]
            else:
                rows[f[1]] = (sense_map[f[0]], {})
                row_order.append(f[1])
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            nm = f[0]
            if nm not in m._index:
                j = m.add_var(nm, 0.0, float("inf"), binary=in_int)
            j = m.index(nm)
            for k in range(1, len(f) - 1, 2):
                row, a = f[k], float(f[k + 1])
                if row == obj_row:
                    if a:
                        m.objective[j] = a
                else:
                    rows[row][1][j] = a
        elif section == "RHS":
            for k in range(1, len(f) - 1, 2):
                rhs[f[k]] = float(f[k + 1])
        elif section == "BOUNDS":
            kind, nm = f[0], f[2]
            j = m.index(nm)
            val = float(f[3]) if len(f) > 3 else 0.0
            if kind == "UP":
                m.ub[j] = val
            elif kind == "LO":
                m.lb[j] = val
            elif kind == "FX":
                m.lb[j] = m.ub[j] = val
            elif kind == "MI":
                m.lb[j] = float("-inf")
            elif kind == "PL":
                m.ub[j] = float("inf")
            elif kind == "BV":
                m.lb[j], m.ub[j] = 0.0, 1.0
                if j not in m.binaries:
                    m.binaries.append(j)
            bounds_seen.add(j)
    for j in m.binaries:
        if j not in bounds_seen:
            m.ub[j] = 1.0
    for name in row_order:
        sense, coefs = rows[name]
        m.add_row(coefs, sense, rhs.get(name, 0.0), name)
    if obj_row in rhs:
        m.objective_constant = -rhs[obj_row]
    m.binaries.sort()
    return m


def read_mps(path) -> MixedModel:
    return parse_mps(Path(path).read_text())
