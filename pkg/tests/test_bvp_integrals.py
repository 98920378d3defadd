import pytest

from errors import NumericError, ValidationError
from services.bvp_integrals import (
    compute_zg,
    double_root_near,
    integral_table,
    simple_walk_F00,
    simple_walk_F01,
    simple_walk_F10,
)
from services.enumeration import asymptotic_fit, count_walks, project_series, series_value
from services.kernel_algebra import build_kernel, numeric_in_z
from services.stepset_catalog import enumerate_models, hull_contains_origin, parse_stepset

SIMPLE = parse_stepset("N,E,S,W")


@pytest.fixture(scope="module")
def simple_120():
    return count_walks(SIMPLE, 120)


def test_small_z_limit():
    assert simple_walk_F00(1e-6) == pytest.approx(1.0, abs=1e-5)
    assert simple_walk_F10(1e-6) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("zv", [0.05, 0.1, 0.2])
def test_F00_matches_series(simple_120, zv):
    s = project_series(simple_120, "F00")
    assert simple_walk_F00(zv) == pytest.approx(series_value(s, zv), abs=1e-8)


@pytest.mark.parametrize("zv", [0.05, 0.1, 0.15])
def test_F10_matches_series(simple_120, zv):
    s = project_series(simple_120, "F10_axis")
    assert simple_walk_F10(zv) == pytest.approx(series_value(s, zv), abs=1e-8)


def test_F01_by_symmetry():
    assert simple_walk_F01(0.12) == simple_walk_F10(0.12)


@pytest.mark.parametrize("zv", [0.0, 0.25, -0.1])
def test_z_outside_range(zv):
    with pytest.raises(ValidationError):
        simple_walk_F00(zv)


@pytest.mark.slow
@pytest.mark.parametrize("which", ["F00", "F10"])
def test_integral_table(which):
    grid = [0.02 * i for i in range(1, 13)]
    result = integral_table(which, grid, N=400)
    assert result.which == which
    assert len(result.rows) == 12
    assert all(row.diff < 1e-8 for row in result.rows)


def test_zg_simple_walk():
    report = compute_zg(SIMPLE)
    assert report.z_g == pytest.approx(0.25, abs=1e-9)
    assert report.genus_below == 1
    assert report.genus_at == 0
    assert report.z_g_exact == "1/4"
    lo, hi = report.bracket
    assert lo < report.z_g < hi


def test_zg_requires_interior_origin():
    with pytest.raises(NumericError):
        compute_zg(parse_stepset("N,E,S"))
    with pytest.raises(ValidationError):
        compute_zg(parse_stepset("(1,0):1/2,(-1,0):1/4,(0,1):1/4"))


def test_integrals_increase_with_z():
    grid = [0.02 * i for i in range(1, 13)]
    for evaluate in (simple_walk_F00, simple_walk_F10):
        values = [evaluate(zv) for zv in grid]
        assert all(a < b for a, b in zip(values, values[1:]))


def test_double_root_detection():
    evaluate = numeric_in_z(build_kernel(SIMPLE, orientation="x"))
    # branch points in y are the roots of (y^2 - (1/z + 2) y + 1)(y^2 - (1/z - 2) y + 1)
    assert double_root_near(evaluate, 0.25, (0.999, 1.001))
    assert not double_root_near(evaluate, 0.2, (0.38, 2.62))


def test_zg_irrational_merge():
    # minimum of x + 1/x + y + 1/y + xy sits at x = y with x^3 + x^2 = 1
    report = compute_zg(parse_stepset("N,E,S,W,NE"))
    assert report.z_g == pytest.approx(1 / 4.729031537980931, abs=1e-8)
    assert report.z_g_exact is None
    assert "genus_at_zg_numeric" in report.flags
    assert (report.genus_below, report.genus_at) == (1, 0)


def test_zg_stable_under_smaller_tol():
    ws = parse_stepset("N,E,S,W,NE")
    coarse = compute_zg(ws, tol=1e-9)
    fine = compute_zg(ws, tol=1e-10)
    assert abs(coarse.z_g - fine.z_g) <= 2e-9
    assert fine.genus_at == coarse.genus_at == 0


@pytest.mark.slow
def test_zg_matches_growth_rate():
    models = [m.representative for m in enumerate_models() if hull_contains_origin(m.representative)][:10]
    for ws in models:
        report = compute_zg(ws)
        series = project_series(count_walks(ws, 300, excursions_only=True), "F00")
        # zero coefficients are skipped, so stride 1 handles periodic models
        fit = asymptotic_fit(series, stride=1)
        assert 1 / report.z_g == pytest.approx(fit.rho, rel=0.01), ws.steps
        assert (report.genus_below, report.genus_at) == (1, 0)
