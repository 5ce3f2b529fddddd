import numpy as np
import pytest

from psplit.bounds import compute_bounds
from psplit.emit import (
    FeasibilityGrid,
    LpParseError,
    UnsupportedModel,
    grid_svg,
    model_to_lp,
    model_to_mps,
    parse_lp,
    parse_mps,
    point_grid,
    project_2d,
    project_disjunction,
    read_grid_csv,
    read_lp,
    render_grid,
    same_model,
    write_lp,
    write_mps,
)
from psplit.emit.figures import plot_grids
from psplit.instances import make_ex1, make_ex2, make_pball
from psplit.partition import resolve_partitions
from psplit.reformulate import compile_bigm, compile_psplit
from psplit.solver.relax import solve_relaxation


def models():
    ex1 = make_ex1((1, -1, 0.5, 2))
    ex2 = make_ex2((1, 1, 1, 1), "max")
    return [compile_bigm(ex1), compile_psplit(ex1, 2), compile_psplit(ex2, 2, linking=True),
            compile_psplit(make_pball(2, 2, 2, seed=1), 2)]


# ---------------------------------------------------------------- LP files


@pytest.mark.parametrize("idx", range(4))
def test_lp_round_trip(idx, tmp_path):
    m = models()[idx]
    path = tmp_path / "m.lp"
    write_lp(m, path)
    back = read_lp(path)
    assert same_model(m, back)
    assert solve_relaxation(back).objective == pytest.approx(solve_relaxation(m).objective, abs=1e-9)


def test_lp_binaries_are_the_indicators():
    m = compile_psplit(make_ex1(), 2)
    text = model_to_lp(m)
    section = text.split("Binaries")[1].split("End")[0].split()
    assert section == ["lam_0_0", "lam_0_1"]


def test_lp_is_deterministic(tmp_path):
    a, b = tmp_path / "a.lp", tmp_path / "b.lp"
    write_lp(compile_psplit(make_ex2(), 2, linking=True), a)
    write_lp(compile_psplit(make_ex2(), 2, linking=True), b)
    assert a.read_bytes() == b.read_bytes()


def test_lp_quadratic_syntax_and_precision():
    text = model_to_lp(compile_bigm(make_ex1()))
    assert "[" in text and "x0 ^ 2" in text
    m = compile_bigm(make_ex1((1 / 3, 0, 0, 0)))
    assert parse_lp(model_to_lp(m)).objective[0] == 1 / 3


def test_lp_parse_error():
    with pytest.raises(LpParseError, match="Bounds"):
        parse_lp("Minimize\n obj: x\nSubject To\n c: x >= 1\nEnd\n")
    with pytest.raises(LpParseError, match="bound line"):
        parse_lp("Minimize\n obj: x\nBounds\n x free\nEnd\n")


# ---------------------------------------------------------------- MPS files


def test_mps_round_trip_affine(tmp_path):
    m = compile_psplit(make_ex2((1, -1, 2, 0)), 2, linking=True)
    path = tmp_path / "m.mps"
    write_mps(m, path)
    back = parse_mps(path.read_text())
    assert back.names == m.names
    assert sorted(back.binaries) == sorted(m.binaries)
    assert solve_relaxation(back).objective == pytest.approx(solve_relaxation(m).objective, abs=1e-9)


def test_mps_refuses_quadratic_rows():
    with pytest.raises(UnsupportedModel, match="write_lp"):
        model_to_mps(compile_bigm(make_ex1()))


def test_mps_columns_stable():
    m1 = model_to_mps(compile_bigm(make_ex2()))
    m2 = model_to_mps(compile_bigm(make_ex2()))
    assert m1 == m2
    cols = [ln.split()[0] for ln in m1.split("COLUMNS")[1].split("RHS")[0].splitlines() if ln.strip()]
    order = list(dict.fromkeys(c for c in cols if c != "MARKER"))
    assert order == compile_bigm(make_ex2()).names


# ---------------------------------------------------------------- grids


def test_origin_feasible_in_tight_one_split():
    p = make_ex1()
    parts = resolve_partitions(p, 1)
    g = project_2d(compile_psplit(p, parts, compute_bounds(p, parts, "obbt-union")), 0, 1, resolution=21)
    assert g.flag_at(0.0, 0.0)


def test_point_grid_excludes_two_two():
    g = point_grid(make_ex1(), 0, 1, fixed=[0, 0, 0, 0], resolution=21)
    assert g.flag_at(0.0, 0.0)
    assert not g.flag_at(2.0, 2.0)


def test_scan_and_cell_methods_agree():
    p = make_ex1()
    m = compile_psplit(p, 2)
    a = project_2d(m, 0, 1, resolution=15, method="scan")
    b = project_2d(m, "x0", "x1", resolution=15, method="cell")
    assert np.array_equal(a.flags, b.flags)


def test_projection_contains_points():
    p = make_ex1()
    truth = project_disjunction(p, 0, 1, resolution=25)
    pts = point_grid(p, 0, 1, fixed=[0, 0, 0, 0], resolution=25)
    assert pts.subset_of(truth)
    for P in (1, 2, 4):
        assert truth.subset_of(project_2d(compile_psplit(p, P), 0, 1, resolution=25))


def test_interval_bound_refinement_nests():
    p = make_ex2()
    grids = [project_2d(compile_psplit(p, P), 0, 1, resolution=21) for P in (1, 2, 4)]
    assert grids[1].subset_of(grids[0]) and grids[2].subset_of(grids[1])


def test_projection_axes_must_differ():
    with pytest.raises(ValueError, match="differ"):
        project_2d(compile_bigm(make_ex2()), 1, 1)


def _tiny(flag=True):
    return FeasibilityGrid((0, 1), ("x0", "x1"), ((0.0, 1.0), (0.0, 1.0)), 1, np.array([[flag]]))


def test_render_single_cell(tmp_path):
    svg, csv_path = render_grid(_tiny(), tmp_path / "g.svg")
    assert svg.read_text().count("<rect") == 1
    assert read_grid_csv(csv_path) == [(0.5, 0.5, 1)]


def test_render_csv_rows_and_bytes(tmp_path):
    g = project_2d(compile_bigm(make_ex2()), 0, 1, resolution=7)
    _, c1 = render_grid(g, tmp_path / "a.svg")
    _, c2 = render_grid(g, tmp_path / "b.svg")
    rows = read_grid_csv(c1)
    assert len(rows) == 49 and sum(f for *_, f in rows) == g.count
    assert c1.read_bytes() == c2.read_bytes()
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert grid_svg(g).startswith("<svg")


def test_plot_grids_writes_png(tmp_path):
    p = make_ex2()
    g = project_2d(compile_psplit(p, 2), 0, 1, resolution=9)
    out = plot_grids([g], tmp_path / "f.png", truth=project_disjunction(p, 0, 1, resolution=9))
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
