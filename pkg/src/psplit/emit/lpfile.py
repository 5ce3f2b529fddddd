"""CPLEX-style LP files with bracketed quadratic constraints."""

from __future__ import annotations

import math
import re
from pathlib import Path

from ..mixed import MixedModel, quad_parts
from ..model import SeparableFunction, UnivariateTerm

TERMS_PER_LINE = 6


def fmt(v: float) -> str:
    v = float(v)
    if v == 0.0:
        return "0"
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _signed(coef: float, name: str, first: bool) -> str:
    if coef < 0:
        return f"- {fmt(-coef)} {name}"
    return f"{fmt(coef)} {name}" if first else f"+ {fmt(coef)} {name}"


def _wrap(tokens: list[str]) -> str:
    lines = []
    for i in range(0, len(tokens), TERMS_PER_LINE):
        lines.append(" ".join(tokens[i:i + TERMS_PER_LINE]))
    return "\n   ".join(lines)


def _linear_tokens(coefs, names) -> list[str]:
    toks = []
    for j, (i, a) in enumerate(coefs):
        toks.append(_signed(a, names[i], not toks))
    return toks


def epigraph_expanded(f: SeparableFunction, var: int):
    """Expanded ``lin x + [quad x^2] <= rhs`` form of ``f <= y[var]``."""
    quads, lin, const = quad_parts(f)
    lin = dict(lin)
    sq = {}
    for t in quads:
        q2, q1, q0 = t.expanded()
        sq[t.var] = q2
        lin[t.var] = lin.get(t.var, 0.0) + q1 - t.lin
        const += q0
    lin[var] = lin.get(var, 0.0) - 1.0
    return sorted((i, a) for i, a in lin.items() if a != 0.0), sorted(sq.items()), -const


def model_to_lp(m: MixedModel) -> str:
    names = m.names
    out = [f"\\ psplit model: {m.formulation or 'model'}", f"\\ n_original {m.n_original}"]
    out.append("Maximize" if m.sense == "max" else "Minimize")
    toks = _linear_tokens(sorted(m.objective.items()), names)
    if m.objective_constant:
        c = m.objective_constant
        toks.append(("- " if c < 0 else ("+ " if toks else "")) + fmt(abs(c)))
    out.append(" obj: " + (_wrap(toks) if toks else "0 " + names[0] if names else "0"))
    out.append("Subject To")
    for r in m.rows:
        toks = _linear_tokens(r.coefs, names) or ["0 " + names[0]]
        out.append(f" {r.name}: {_wrap(toks)} {r.sense} {fmt(r.rhs)}")
    for e in m.epigraphs:
        lin, sq, rhs = epigraph_expanded(e.f, e.var)
        toks = _linear_tokens(lin, names)
        qt = []
        for i, q in sq:
            qt.append(_signed(q, f"{names[i]} ^ 2", not qt))
        quad = "[ " + " ".join(qt) + " ]"
        body = _wrap(toks + [("+ " if toks else "") + quad])
        out.append(f"\\ epigraph {e.name} {names[e.var]}")
        out.append(f" {e.name}: {body} <= {fmt(rhs)}")
    out.append("Bounds")
    bins = set(m.binaries)
    for i, nm in enumerate(names):
        lo, hi = m.lb[i], m.ub[i]
        if lo == hi:
            out.append(f" {nm} = {fmt(lo)}")
        else:
            out.append(f" {fmt(lo)} <= {nm} <= {fmt(hi)}")
    if bins:
        out.append("Binaries")
        for i in sorted(bins):
            out.append(f" {names[i]}")
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(m: MixedModel, path) -> None:
    """Deterministic LP text; quadratic parts are written in expanded form."""
    Path(path).write_text(model_to_lp(m))


# ---------------------------------------------------------------------------
# reader

_SECTIONS = {
    "minimize": "obj", "minimise": "obj", "min": "obj", "maximize": "obj", "maximise": "obj", "max": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin", "end": "end",
}

_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|=|\[|\]|\^|[+-]|[^\s\[\]\^+<>=-][^\s\[\]\^<>=]*)")


class LpParseError(ValueError):
    pass


def _tokens(text: str) -> list[str]:
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt:
            raise LpParseError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        toks.append(mt.group(1))
        pos = mt.end()
    return toks


def _is_num(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_expr(toks: list[str]):
    """Returns (linear {name: coef}, quadratic {name: coef}, constant)."""
    lin, quad, const = {}, {}, 0.0
    sign, coef, in_quad = 1.0, None, False
    i = 0
    while i < len(toks):
        t = toks[i]
        if t == "+":
            sign = 1.0
        elif t == "-":
            sign = -1.0
        elif t == "[":
            in_quad = True
        elif t == "]":
            in_quad = False
        elif _is_num(t) and not (i + 1 < len(toks) and toks[i + 1] == "^"):
            coef = float(t)
            nxt = toks[i + 1] if i + 1 < len(toks) else None
            if nxt is None or nxt in ("+", "-", "[", "]"):
                const += sign * coef
                sign, coef = 1.0, None
        else:
            name = t
            value = sign * (coef if coef is not None else 1.0)
            if i + 2 < len(toks) and toks[i + 1] == "^":
                if toks[i + 2] != "2":
                    raise LpParseError(f"unsupported power {toks[i + 2]}")
                quad[name] = quad.get(name, 0.0) + value
                i += 2
            else:
                lin[name] = lin.get(name, 0.0) + value
            sign, coef = 1.0, None
        i += 1
    return lin, quad, const


def _idx(m: MixedModel, name: str) -> int:
    try:
        return m.index(name)
    except KeyError:
        raise LpParseError(f"variable {name!r} has no line in the Bounds section") from None


def parse_lp(text: str) -> MixedModel:
    section = None
    m = MixedModel()
    obj_lines: list[str] = []
    cons: list[str] = []
    bounds: list[str] = []
    bins: list[str] = []
    epi_var: dict[str, str] = {}
    for raw in text.splitlines():
        if raw.startswith("\\ epigraph "):
            _, _, ename, vname = raw.split()
            epi_var[ename] = vname
            continue
        line = raw.split("\\", 1)[0] if not raw.startswith("\\ n_original") else ""
        if raw.startswith("\\ n_original"):
            m.n_original = int(raw.split()[-1])
            continue
        if raw.startswith("\\ psplit model:"):
            m.formulation = raw.split(":", 1)[1].strip()
            continue
        s = line.strip()
        if not s:
            continue
        key = s.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "obj":
                m.sense = "max" if key.startswith("max") else "min"
            continue
        if section == "obj":
            obj_lines.append(s)
        elif section == "st":
            if cons and not re.match(r"^[A-Za-z_][\w.]*\s*:", s):
                cons[-1] += " " + s
            else:
                cons.append(s)
        elif section == "bounds":
            bounds.append(s)
        elif section == "bin":
            bins.extend(s.split())
        elif section == "end":
            break
    # variables come from the bounds section (written for every variable)
    for b in bounds:
        parts = [x.strip() for x in re.split(r"<=", b)]
        try:
            if len(parts) == 3:
                lo, nm, hi = float(parts[0].replace(" ", "")), parts[1], float(parts[2].replace(" ", ""))
            elif len(parts) == 1 and "=" in b:
                nm, val = (x.strip() for x in b.split("=", 1))
                lo = hi = float(val.replace(" ", ""))
            else:
                raise ValueError
        except ValueError:
            raise LpParseError(f"unsupported bound line {b!r}") from None
        m.add_var(nm, lo, hi, binary=False)
    for nm in bins:
        m.binaries.append(_idx(m, nm))
        m.roles[_idx(m, nm)] = "lambda"
    body = " ".join(obj_lines)
    body = body.split(":", 1)[1] if ":" in body else body
    lin, _, const = _parse_expr(_tokens(body))
    m.objective = {_idx(m, n): a for n, a in lin.items() if a != 0.0}
    m.objective_constant = const
    for c in cons:
        name, expr = c.split(":", 1)
        toks = _tokens(expr)
        k = max(i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "=<", "=>"))
        sense = {"=<": "<=", "=>": ">="}.get(toks[k], toks[k])
        rhs = float("".join(toks[k + 1:]))
        lin, quad, const = _parse_expr(toks[:k])
        rhs -= const
        name = name.strip()
        if not quad:
            m.add_row({_idx(m, n): a for n, a in lin.items()}, sense, rhs, name)
            continue
        # lin x + [q x^2] <= rhs with exactly one -1 coefficient variable outside the squares
        if sense != "<=":
            raise LpParseError(f"quadratic row {name} is not an epigraph row")
        if name in epi_var:
            y = epi_var[name]
        else:
            epi = [n for n, a in lin.items() if a == -1.0 and n not in quad]
            if not epi:
                raise LpParseError(f"quadratic row {name} has no epigraph variable")
            y = epi[-1]
        lin = dict(lin)
        lin[y] = lin.get(y, 0.0) + 1.0
        if lin[y] == 0.0:
            del lin[y]
        terms = [UnivariateTerm(_idx(m, n), q, 0.0, lin.get(n, 0.0)) for n, q in quad.items()]
        terms += [UnivariateTerm(_idx(m, n), 0.0, 0.0, a) for n, a in lin.items() if n not in quad and n != y]
        f = SeparableFunction.build(terms, -rhs)
        m.add_epigraph(f, _idx(m, y), name=name)
    return m


def read_lp(path) -> MixedModel:
    return parse_lp(Path(path).read_text())


def _expanded_key(f: SeparableFunction):
    const = f.constant
    out = {}
    for t in f.terms:
        q2, q1, q0 = t.expanded()
        out[t.var] = (q2, q1)
        const += q0
    return out, const


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def same_model(a: MixedModel, b: MixedModel, tol: float = 1e-12) -> bool:
    """Structural equality up to the expanded form of quadratic terms."""
    if (a.names, a.sense, sorted(a.binaries)) != (b.names, b.sense, sorted(b.binaries)):
        return False
    if any(not _close(x, y, tol) for x, y in zip(a.lb + a.ub, b.lb + b.ub)):
        return False
    if not _close(a.objective_constant, b.objective_constant, tol):
        return False
    if a.objective.keys() != b.objective.keys() or any(not _close(a.objective[k], b.objective[k], tol) for k in a.objective):
        return False
    if len(a.rows) != len(b.rows) or len(a.epigraphs) != len(b.epigraphs):
        return False
    for r, s in zip(a.rows, b.rows):
        if (r.name, r.sense, [i for i, _ in r.coefs]) != (s.name, s.sense, [i for i, _ in s.coefs]):
            return False
        if not _close(r.rhs, s.rhs, tol) or any(not _close(x, y, tol) for (_, x), (_, y) in zip(r.coefs, s.coefs)):
            return False
    for e, g in zip(a.epigraphs, b.epigraphs):
        if (e.name, e.var) != (g.name, g.var):
            return False
        (te, ce), (tg, cg) = _expanded_key(e.f), _expanded_key(g.f)
        if te.keys() != tg.keys() or not _close(ce, cg, 1e-9):
            return False
        if any(not _close(x, y, 1e-9) for v in te for x, y in zip(te[v], tg[v])):
            return False
    return True
