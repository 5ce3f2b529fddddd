"""Command line front end: ``psplit reformulate|solve|compare|project|generate``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .bounds import INTERVAL, LOCAL, OBBT_UNION, compute_bounds, read_bounds_csv
from .instances import (
    load_network,
    load_points_csv,
    make_clustering,
    make_ex1,
    make_ex2,
    make_osif,
    make_pball,
    random_affine_problem,
    random_network,
    save_network,
)
from .mixed import MixedModel
from .model import DisjunctiveProblem, ModelError, load_problem, save_problem, validate
from .partition import PartitionError, parse_partition, resolve_partitions
from .reformulate import FORMULATIONS, ReformulationError, UnsupportedFormulation, compile_problem
from .solver.bnb import solve_bnb
from .solver.relax import solve_relaxation

log = logging.getLogger("psplit")

RESULT_COLUMNS = ["instance", "formulation", "P", "linking", "sharing", "bound_mode", "relax_value", "mip_value",
                  "nodes", "time_s", "status"]
BOUND_MODES = (INTERVAL, OBBT_UNION, "obbt-local")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    instance: str = "ex1"
    formulation: str = "psplit"
    P: list[int | str] | None = None
    partition: str | None = None
    bounds: str = INTERVAL
    linking: bool = False
    share_alpha: str | None = None
    time_limit: float | None = None
    node_limit: int | None = None
    seed: int = 0
    out: str | None = None
    resolution: int = 101
    axes: tuple[str, str] = ("0", "1")
    timing: bool = False
    append: bool = False
    objective: str | None = None
    maximize: bool = False


# ---------------------------------------------------------------------------
# instance and model setup


def load_instance(spec: str) -> DisjunctiveProblem:
    """Built-in name (``ex1``, ``ex2``, ``rand:SEED``) or a problem JSON file."""
    if spec == "ex1":
        return make_ex1()
    if spec == "ex2":
        return make_ex2()
    if spec.startswith("rand:"):
        try:
            return random_affine_problem(int(spec.split(":", 1)[1]))
        except ValueError:
            raise UsageError(f"bad random instance {spec!r}; expected rand:SEED") from None
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"unknown instance {spec!r}: not a built-in name and no such file")
    return load_problem(path)


def load_configured(cfg: RunConfig) -> DisjunctiveProblem:
    """The instance with any objective override from the command line."""
    problem = load_instance(cfg.instance)
    if cfg.objective is None and not cfg.maximize:
        return problem
    c = problem.objective
    if cfg.objective is not None:
        try:
            c = tuple(float(t) for t in cfg.objective.split(","))
        except ValueError:
            raise UsageError(f"--objective expects comma-separated numbers, got {cfg.objective!r}") from None
        if len(c) != problem.n:
            raise UsageError(f"--objective has {len(c)} entries, the instance has {problem.n} variables")
    return replace(problem, objective=c, sense="max" if cfg.maximize else problem.sense)


def _p_value(problem: DisjunctiveProblem, P) -> int:
    if P == "n":
        return max(len(d.support) for d in problem.disjunctions)
    return int(P)


def build_model(problem: DisjunctiveProblem, formulation: str, P, cfg: RunConfig) -> MixedModel:
    if formulation not in FORMULATIONS:
        raise UsageError(f"unknown formulation {formulation!r}; choose from {', '.join(FORMULATIONS)}")
    if formulation == "hull":
        return compile_problem(problem, "hull")
    spec = parse_partition(cfg.partition) if cfg.partition else _p_value(problem, P)
    if formulation == "bigm":
        spec = 1
    parts = resolve_partitions(problem, spec)
    if cfg.bounds in BOUND_MODES:
        bounds = compute_bounds(problem, parts, cfg.bounds)
    else:
        path = Path(cfg.bounds)
        if not path.exists():
            raise UsageError(f"--bounds must be one of {', '.join(BOUND_MODES)} or an existing CSV file")
        bounds = read_bounds_csv(path, len(problem.disjunctions))
    if formulation == "bigm":
        return compile_problem(problem, "bigm", bounds=bounds)
    return compile_problem(problem, formulation, parts, bounds, linking=cfg.linking, share_alpha=cfg.share_alpha or False)


def bound_label(cfg: RunConfig) -> str:
    return cfg.bounds if cfg.bounds in BOUND_MODES else "file"


def _num(v: float) -> str:
    return "" if v is None or not math.isfinite(v) else format(v, ".10g")


def result_row(problem, formulation, P, cfg, relax, mip, elapsed) -> dict:
    return {
        "instance": problem.name or cfg.instance,
        "formulation": formulation,
        "P": "" if formulation == "hull" else (1 if formulation == "bigm" else P),
        "linking": int(cfg.linking and formulation == "psplit"),
        "sharing": (cfg.share_alpha or "") if formulation == "psplit" else "",
        "bound_mode": "" if formulation == "hull" else bound_label(cfg),
        "relax_value": _num(relax.objective) if relax.ok else "",
        "mip_value": _num(mip.objective) if mip is not None else "",
        "nodes": mip.nodes if mip is not None else "",
        "time_s": f"{elapsed:.3f}" if cfg.timing else "",
        "status": mip.status if mip is not None else relax.status,
    }


def write_rows(rows: list[dict], path, append: bool = False) -> None:
    path = Path(path)
    fresh = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if not fresh else "w", newline="") as fh:
        w = csv.DictWriter(fh, RESULT_COLUMNS, lineterminator="\n")
        if fresh:
            w.writeheader()
        w.writerows(rows)


def run_one(problem, formulation, P, cfg: RunConfig, solve: bool = True) -> dict:
    t0 = time.perf_counter()
    m = build_model(problem, formulation, P, cfg)
    relax = solve_relaxation(m)
    mip = solve_bnb(m, cfg.time_limit, cfg.node_limit) if solve else None
    return result_row(problem, formulation, P, cfg, relax, mip, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# commands


def cmd_reformulate(cfg: RunConfig) -> int:
    from .emit import write_lp, write_mps

    problem = load_configured(cfg)
    P = (cfg.P or [1])[0]
    m = build_model(problem, cfg.formulation, P, cfg)
    if cfg.out:
        if cfg.out.lower().endswith(".mps"):
            write_mps(m, cfg.out)
        else:
            write_lp(m, cfg.out)
    counts = m.counts()
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    problem = load_configured(cfg)
    P = (cfg.P or [1])[0]
    row = run_one(problem, cfg.formulation, P, cfg)
    print(f"status={row['status']} objective={row['mip_value']} relaxation={row['relax_value']} "
          f"nodes={row['nodes']}" + (f" time_s={row['time_s']}" if cfg.timing else ""))
    if cfg.out:
        write_rows([row], cfg.out, cfg.append)
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    from .emit.figures import plot_compare

    if not cfg.P:
        raise UsageError("compare needs a nonempty --p list, e.g. --p 1,2,4")
    problem = load_configured(cfg)
    plan = [("bigm", 1)] + [("psplit", P) for P in cfg.P]
    if all(d.is_affine for d in problem.disjunctions):
        plan.append(("hull", ""))
    rows = [run_one(problem, f, P, cfg) for f, P in plan]
    buf = io.StringIO()
    w = csv.DictWriter(buf, RESULT_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if cfg.out:
        Path(cfg.out).write_text(buf.getvalue())
        plot_compare(rows, Path(cfg.out).with_suffix(".png"))
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_project(cfg: RunConfig) -> int:
    from .emit import project_2d, project_disjunction, render_grid
    from .emit.figures import plot_grids

    problem = load_configured(cfg)
    names = [problem.var_name(i) for i in range(problem.n)]
    axes = []
    for a in cfg.axes:
        if a.lstrip("-").isdigit():
            k = int(a)
        elif a in names:
            k = names.index(a)
        else:
            raise UsageError(f"unknown axis {a!r}")
        if not 0 <= k < problem.n:
            raise UsageError(f"axis {a!r} is outside 0..{problem.n - 1}")
        axes.append(k)
    if axes[0] == axes[1]:
        raise UsageError("--axes needs two different variables")
    if cfg.resolution < 1:
        raise UsageError("--resolution must be positive")
    out = Path(cfg.out or f"{problem.name or 'problem'}_{cfg.formulation}")
    out.parent.mkdir(parents=True, exist_ok=True)
    truth = project_disjunction(problem, axes[0], axes[1], cfg.resolution)
    grids = []
    for P in cfg.P or [1]:
        m = build_model(problem, cfg.formulation, P, cfg)
        label = cfg.formulation if cfg.formulation in ("bigm", "hull") else f"{cfg.formulation} P={P}"
        g = project_2d(m, axes[0], axes[1], cfg.resolution, label=label)
        stem = out if len(cfg.P or [1]) == 1 else out.with_name(f"{out.name}_P{P}")
        svg, twin = render_grid(g, stem.with_suffix(".svg"))
        print(f"{label}: {g.count} of {cfg.resolution ** 2} cells feasible ({truth.count} exact) -> {svg}, {twin}")
        grids.append(g)
    render_grid(truth, out.with_name(out.name + "_exact.svg"))
    plot_grids(grids, out.with_suffix(".png"), truth)
    return EXIT_OK


def cmd_generate(cfg: RunConfig, args) -> int:
    kind = args.kind
    if kind == "network":
        sizes = _int_list(args.sizes, "--sizes")
        nn = random_network(sizes, cfg.seed)
        if not cfg.out:
            raise UsageError("generate network needs --out")
        save_network(nn, cfg.out)
        return EXIT_OK
    if kind == "clustering":
        if not args.points:
            raise UsageError("generate clustering needs --points CSV")
        problem = make_clustering(load_points_csv(args.points), args.k)
    elif kind == "pball":
        problem = make_pball(args.balls, args.n_points, args.dim, cfg.seed)
    elif kind == "osif":
        nn = load_network(args.weights) if args.weights else random_network(_int_list(args.sizes, "--sizes"), cfg.seed)
        problem = make_osif(nn, args.target, args.budget)
    elif kind == "random":
        problem = random_affine_problem(cfg.seed, args.dim, args.k, args.n_points)
    else:
        problem = load_instance(kind)
    report = validate(problem, check_feasibility=False)
    for w in report.warnings:
        log.warning(w)
    if report.errors:
        raise ModelError("; ".join(report.errors))
    if cfg.out:
        save_problem(problem, cfg.out)
    else:
        from .model import dumps_problem

        sys.stdout.write(dumps_problem(problem))
    print(f"{problem.name}: n={problem.n} disjunctions={len(problem.disjunctions)}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{flag} is empty")
    return vals


def _p_list(text: str) -> list[int | str]:
    out: list[int | str] = []
    for t in text.split(","):
        t = t.strip()
        if not t:
            continue
        if t == "n":
            out.append("n")
            continue
        try:
            v = int(t)
        except ValueError:
            raise UsageError(f"--p expects integers or 'n', got {t!r}") from None
        if v < 1:
            raise UsageError("--p values must be at least 1")
        out.append(v)
    return out


def _common(sp: argparse.ArgumentParser, model: bool = True) -> None:
    sp.add_argument("instance", help="ex1, ex2, rand:SEED or a problem JSON file")
    if model:
        sp.add_argument("--formulation", default="psplit", choices=FORMULATIONS)
        sp.add_argument("--p", default="1", help="number of splits; compare takes a list such as 1,2,4 (n = all)")
        sp.add_argument("--partition", help="explicit variable partition such as '0,1|2,3'")
        sp.add_argument("--bounds", default=INTERVAL,
                        help="interval, obbt-union, obbt-local or a bounds CSV file")
        sp.add_argument("--linking", action="store_true", help="add linking constraints between splits")
        sp.add_argument("--share-alpha", nargs="?", const="positive", default=None, choices=("positive", "signed"),
                        help="share split variables of proportional sums (signed: also negative factors, affine only)")
        sp.add_argument("--objective", help="comma-separated linear objective replacing the instance's")
        sp.add_argument("--maximize", action="store_true", help="maximize instead of minimize")
    sp.add_argument("--out", help="output path")
    sp.add_argument("--seed", type=int, default=0)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psplit", description="P-split reformulations of disjunctive programs")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("reformulate", help="compile a model and write an LP or MPS file")
    _common(sp)

    for name, text in (("solve", "branch and bound on one formulation"),
                       ("compare", "relaxation value and nodes across a P sweep")):
        sp = sub.add_parser(name, help=text)
        _common(sp)
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--node-limit", type=int)
        sp.add_argument("--timing", action="store_true", help="fill the time_s column (output is then not reproducible)")
        if name == "solve":
            sp.add_argument("--append", action="store_true", help="append the result row to an existing CSV")

    sp = sub.add_parser("project", help="2-D feasibility grids of the relaxation")
    _common(sp)
    sp.add_argument("--resolution", type=int, default=101)
    sp.add_argument("--axes", default="0,1", help="two variable indices or names, e.g. 0,1")

    sp = sub.add_parser("generate", help="write a problem (or network weights) file")
    sp.add_argument("kind", help="clustering, pball, osif, network, random, ex1 or ex2")
    sp.add_argument("--out", help="output path (stdout when omitted)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--points", help="clustering: CSV of points, one per row")
    sp.add_argument("--k", type=int, default=2, help="clustering: clusters; random: disjuncts")
    sp.add_argument("--balls", type=int, default=2)
    sp.add_argument("--n-points", type=int, default=2, help="pball: points; random: constraints per disjunct")
    sp.add_argument("--dim", type=int, default=2, help="pball: dimension; random: variables")
    sp.add_argument("--weights", help="osif: network weights JSON")
    sp.add_argument("--sizes", default="4,4,4,3", help="layer sizes for a seeded random network")
    sp.add_argument("--target", type=int, default=0, help="osif: target class")
    sp.add_argument("--budget", type=float, default=2.0, help="osif: l1 input budget")
    return ap


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(args.command, out=args.out, seed=args.seed)
    if args.command == "generate":
        return cfg
    cfg.instance = args.instance
    cfg.formulation = args.formulation
    cfg.P = _p_list(args.p)
    if not cfg.P:
        raise UsageError("--p list is empty")
    if args.command not in ("compare", "project") and len(cfg.P) > 1:
        raise UsageError(f"{args.command} takes a single --p value")
    if args.partition:
        try:
            parse_partition(args.partition)
        except PartitionError as exc:
            raise UsageError(f"bad --partition: {exc}") from None
        cfg.partition = args.partition
    cfg.bounds = args.bounds
    cfg.objective = args.objective
    cfg.maximize = args.maximize
    cfg.linking = args.linking
    cfg.share_alpha = args.share_alpha
    cfg.time_limit = getattr(args, "time_limit", None)
    cfg.node_limit = getattr(args, "node_limit", None)
    cfg.timing = getattr(args, "timing", False)
    cfg.append = getattr(args, "append", False)
    if args.command == "project":
        cfg.resolution = args.resolution
        axes = [a.strip() for a in args.axes.split(",")]
        if len(axes) != 2:
            raise UsageError("--axes needs exactly two entries")
        cfg.axes = (axes[0], axes[1])
    if cfg.linking and cfg.formulation != "psplit":
        raise UsageError("--linking applies to the psplit formulation only")
    if cfg.time_limit is not None and cfg.time_limit <= 0:
        raise UsageError("--time-limit must be positive")
    return cfg


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        handlers = {"reformulate": cmd_reformulate, "solve": cmd_solve, "compare": cmd_compare,
                    "project": cmd_project}
        if cfg.command == "generate":
            return cmd_generate(cfg, args)
        return handlers[cfg.command](cfg)
    except UsageError as exc:
        print(f"psplit: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PartitionError as exc:
        print(f"psplit: bad partition: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedFormulation as exc:
        print(f"psplit: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ReformulationError, ModelError, ValueError, OSError) as exc:
        print(f"psplit: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
