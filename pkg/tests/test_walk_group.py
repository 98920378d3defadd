from fractions import Fraction

import pytest

from errors import SamplingError, ValidationError
from models import BirationalPoint, GroupOrderReport, WeightedStepSet
from services.stepset_catalog import enumerate_models, parse_stepset
from services.walk_group import (
    apply_eta,
    apply_xi,
    census_group_histogram,
    delta,
    group_order,
    in_algebraic_table,
    inventory,
    kernel_value,
    nature_report,
    orbit,
)

ALL_EIGHT = WeightedStepSet.counting([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)])
GESSEL = parse_stepset("(1,0),(-1,0),(1,1),(-1,-1)")
KREWERAS = parse_stepset("(-1,0),(0,-1),(1,1)")
SIMPLE = parse_stepset("N,E,S,W")

POINTS = [
    BirationalPoint(Fraction(2, 3), Fraction(5, 7)),
    BirationalPoint(Fraction(3), Fraction(1, 4)),
    BirationalPoint(Fraction(-5, 2), Fraction(9, 11)),
]


def test_all_eight_involutions_invert():
    p = POINTS[0]
    assert apply_xi(p, ALL_EIGHT) == BirationalPoint(p.x, 1 / p.y)
    assert apply_eta(p, ALL_EIGHT) == BirationalPoint(1 / p.x, p.y)


@pytest.mark.parametrize("ws", [SIMPLE, KREWERAS, GESSEL, parse_stepset("N,SE,W,S")])
def test_involutions(ws):
    for p in POINTS:
        assert apply_xi(apply_xi(p, ws), ws) == p
        assert apply_eta(apply_eta(p, ws), ws) == p


@pytest.mark.parametrize("ws", [SIMPLE, KREWERAS, GESSEL])
def test_group_preserves_curve(ws):
    # each point sits on the curve at z = 1 / S(p)
    for p in POINTS:
        zv = 1 / inventory(p, ws)
        assert kernel_value(p, ws, zv) == 0
        assert kernel_value(apply_xi(p, ws), ws, zv) == 0
        assert kernel_value(delta(p, ws), ws, zv) == 0


def test_orbit_of_simple_walk_closes():
    p = POINTS[1]
    points = orbit(p, SIMPLE, 2)
    assert points[0] == p
    assert points[2] == p
    assert points[1] != p


@pytest.mark.parametrize("ws, order", [(SIMPLE, 4), (ALL_EIGHT, 4), (KREWERAS, 6), (GESSEL, 8)])
def test_group_order(ws, order):
    report = group_order(ws)
    assert report.order == order
    assert report.label == str(order)
    assert len(report.z_values) == report.trials


def test_unbounded_group():
    report = group_order(parse_stepset("N,SE,W,S"), cap=20)
    assert report.order is None
    assert report.unbounded_beyond == 20
    assert report.label == "unbounded"


def test_group_order_is_reproducible():
    assert group_order(GESSEL, seed=3) == group_order(GESSEL, seed=3)


def test_group_order_rejects_bad_arguments():
    with pytest.raises(ValidationError):
        group_order(SIMPLE, cap=0)
    with pytest.raises(SamplingError):
        group_order(parse_stepset("N,E,SE"))


def test_nature_report():
    assert nature_report(SIMPLE, group_order(SIMPLE)) == "holonomic_nonalgebraic"
    assert nature_report(GESSEL, group_order(GESSEL)) == "algebraic"
    unbounded = GroupOrderReport(order=None, unbounded_beyond=30, cap=30, trials=5, seed=1)
    assert nature_report(SIMPLE, unbounded) == "unclassified"


def test_algebraic_table_is_reflection_invariant():
    assert in_algebraic_table(KREWERAS)
    assert in_algebraic_table(parse_stepset("(1,0),(0,1),(-1,-1)"))
    assert not in_algebraic_table(SIMPLE)


@pytest.mark.slow
def test_census_histogram():
    histogram = census_group_histogram(enumerate_models(), cap=20)
    assert histogram == {"4": 16, "6": 5, "8": 2, "unbounded": 56}


@pytest.mark.parametrize("ws, order", [(SIMPLE, 4), (KREWERAS, 6), (GESSEL, 8)])
def test_group_order_is_seed_independent(ws, order):
    orders = {group_order(ws, seed=seed).order for seed in (1, 2, 20240521)}
    assert orders == {order}
