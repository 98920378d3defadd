from fractions import Fraction

import pytest

from errors import ValidationError
from services.enumeration import (
    asymptotic_fit,
    count_walks,
    project_series,
    ratio_sequence,
    series_to_frame,
    series_value,
    table_to_frame,
    table_to_sparse,
    verify_cgf_equation,
)
from services.stepset_catalog import enumerate_models, parse_stepset

SIMPLE = parse_stepset("N,E,S,W")


@pytest.fixture(scope="module")
def simple_400():
    return count_walks(SIMPLE, 400)


def test_empty_path():
    for model in enumerate_models()[::10]:
        assert count_walks(model.representative, 0).excursions == [1]


def test_simple_walk_excursions():
    t = count_walks(SIMPLE, 8, keep_layers=True)
    assert t.excursions[:5] == [1, 0, 2, 0, 10]
    assert t.count(0, 0, 4) == 10
    assert t.count(1, 0, 1) == 1
    assert t.count(3, 3, 2) == 0


def test_first_step_totals():
    t = count_walks(SIMPLE, 3)
    assert t.totals[1] == 2
    assert t.x_axis[1] == 1


def test_excursions_only_agrees():
    full = count_walks(SIMPLE, 30)
    trimmed = count_walks(SIMPLE, 30, excursions_only=True)
    assert trimmed.excursions == full.excursions
    with pytest.raises(ValidationError):
        project_series(trimmed, "F11_total")


def test_counting_mode_required():
    with pytest.raises(ValidationError):
        count_walks(parse_stepset("(1,0):1/2,(-1,0):1/2"), 4)


def test_project_series():
    t = count_walks(SIMPLE, 6, keep_layers=True)
    assert project_series(t, "F00").coefficients == [1, 0, 2, 0, 10, 0, 70]
    assert project_series(t, ("slice", 1, 1)).coefficients == t.totals
    with pytest.raises(ValidationError):
        project_series(t, "F22")


def test_slice_at_rational_point():
    t = count_walks(SIMPLE, 3, keep_layers=True)
    s = project_series(t, ("slice", Fraction(1, 2), 0))
    # walks ending on the x-axis, weighted by 2^-i
    assert s.coefficients[1] == Fraction(1, 2)


def test_slice_needs_layers():
    with pytest.raises(ValidationError):
        project_series(count_walks(SIMPLE, 3), ("slice", 2, 1))


@pytest.mark.parametrize("spec", ["N,E,S,W", "(1,1),(-1,0),(0,-1)", "(1,0),(-1,0),(1,1),(-1,-1)", "N,E,S"])
def test_functional_equation_holds(spec):
    assert verify_cgf_equation(parse_stepset(spec), 10) == 0


def test_functional_equation_needs_length():
    with pytest.raises(ValidationError):
        verify_cgf_equation(SIMPLE, 1)


@pytest.mark.slow
def test_functional_equation_census():
    for model in enumerate_models():
        assert verify_cgf_equation(model.representative, 12) == 0, model.id


def test_exports():
    t = count_walks(SIMPLE, 4, keep_layers=True)
    frame = series_to_frame(project_series(t, "F00"))
    assert list(frame.columns) == ["k", "coefficient"]
    assert frame["coefficient"].tolist() == ["1", "0", "2", "0", "10"]

    wide = table_to_frame(t)
    assert list(wide.columns) == ["k", "F00", "F10_axis", "F01_axis", "F11_total"]

    sparse = table_to_sparse(t)
    assert sparse["N"] == 4
    assert {"i": 0, "j": 0, "k": 4, "count": "10"} in sparse["counts"]


def test_series_value_small_z():
    s = project_series(count_walks(SIMPLE, 40), "F00")
    assert series_value(s, 0.0) == 1.0
    assert series_value(s, 0.1) > 1.0


def test_fit_needs_points():
    s = project_series(count_walks(SIMPLE, 10), "F00")
    with pytest.raises(ValidationError):
        asymptotic_fit(s, stride=2)


@pytest.mark.slow
def test_simple_walk_amplitude(simple_400):
    ratios = ratio_sequence(project_series(simple_400, "F00"), range(180, 201), "F00")
    assert all(0.9 <= r <= 1.1 for r in ratios)


@pytest.mark.slow
@pytest.mark.parametrize("target, stride, rho, gamma", [
    ("F00", 2, 16, 3),
    ("F10_axis", 1, 4, 2),
    ("F11_total", 1, 4, 1),
])
def test_simple_walk_growth(simple_400, target, stride, rho, gamma):
    fit = asymptotic_fit(project_series(simple_400, target), stride=stride)
    assert fit.rho == pytest.approx(rho, rel=0.02)
    assert fit.gamma == pytest.approx(gamma, rel=0.10)


@pytest.mark.parametrize("spec", ["N,E,S,W", "(1,0),(-1,0),(1,1),(-1,-1)", "N,SE,W,S", "N,E,NE"])
def test_row_sums_bounded_by_step_count(spec):
    ws = parse_stepset(spec)
    t = count_walks(ws, 20)
    for k in range(20):
        assert t.totals[k + 1] <= len(ws.steps) * t.totals[k]


def test_row_sums_equal_without_boundary():
    t = count_walks(parse_stepset("N,E,NE"), 12)
    assert t.totals == [3**k for k in range(13)]
    assert count_walks(SIMPLE, 1).totals[1] < 4


@pytest.mark.parametrize("spec", ["N,E,S,W", "(1,1),(-1,0),(0,-1)", "N,NE,E,S,SW,W"])
def test_diagonal_symmetry(spec):
    t = count_walks(parse_stepset(spec), 10, keep_layers=True)
    for k in range(11):
        for i in range(k + 1):
            for j in range(i):
                assert t.count(i, j, k) == t.count(j, i, k)
