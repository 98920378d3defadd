from fractions import Fraction

import pytest

from errors import StepSetError
from models import COUNTING, PROBABILISTIC, WeightedStepSet
from services.stepset_catalog import (
    canonicalize,
    census_entry,
    enumerate_models,
    find_model,
    format_stepset,
    hull_contains_origin,
    is_census_candidate,
    is_symmetric,
    model_by_id,
    parse_stepset,
    reflect,
)


def test_parse_compass_names():
    ws = parse_stepset("N,E,S,W")
    assert ws.mode == COUNTING
    assert set(ws.steps) == {(0, 1), (1, 0), (0, -1), (-1, 0)}
    assert all(w == 1 for w in ws.weights)


def test_parse_pairs_and_whitespace():
    ws = parse_stepset(" (1,1), (-1,0),(0,-1) ")
    assert ws.size == 3
    assert ws.mode == COUNTING


def test_parse_weighted():
    ws = parse_stepset("(1,0):1/2,(-1,0):1/2")
    assert ws.mode == PROBABILISTIC
    assert sum(ws.weights) == 1
    assert ws.weight(1, 0) == Fraction(1, 2)


@pytest.mark.parametrize("spec", [
    "",
    "N,N",
    "(2,0)",
    "(0,0)",
    "N,",
    "N;E",
    "N:1/2,E",
    "N:1/2,E:1/3",
    "Q",
])
def test_parse_rejects(spec):
    with pytest.raises(StepSetError):
        parse_stepset(spec)


def test_format_round_trip():
    for spec in ("N,E,S,W", "(1,1),(-1,0),(0,-1)", "(1,0):1/3,(0,1):2/3"):
        ws = parse_stepset(spec)
        assert parse_stepset(format_stepset(ws)) == ws


def test_census_size():
    assert len(enumerate_models()) == 79


def test_census_ids_are_sequential():
    models = enumerate_models()
    assert [m.id for m in models] == list(range(1, 80))
    assert model_by_id(1) == models[0]
    with pytest.raises(StepSetError):
        model_by_id(80)


def test_full_set_in_census():
    ws = WeightedStepSet.counting([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)])
    assert find_model(ws) is not None


def test_single_step_excluded():
    assert not is_census_candidate([(1, 1)])
    assert find_model(WeightedStepSet.counting([(1, 1)])) is None


def test_census_representatives_are_canonical():
    for model in enumerate_models():
        assert canonicalize(model.representative) == model.representative
        if model.symmetric_twin is not None:
            assert canonicalize(model.symmetric_twin) == model.representative


def test_canonicalize_fixed_point():
    ws = WeightedStepSet.counting([(1, 0), (0, 1), (-1, -1)])
    assert is_symmetric(ws)
    assert canonicalize(ws) == ws


def test_canonicalize_reflection_pair():
    a = WeightedStepSet.counting([(1, 0)])
    b = WeightedStepSet.counting([(0, 1)])
    assert reflect(a) == b
    assert canonicalize(a) == canonicalize(b)


def test_canonicalize_idempotent():
    for model in enumerate_models()[::7]:
        twin = model.symmetric_twin or model.representative
        once = canonicalize(twin)
        assert canonicalize(once) == once


def test_hull_contains_origin():
    assert hull_contains_origin(parse_stepset("N,E,S,W"))
    assert hull_contains_origin(parse_stepset("(1,1),(-1,0),(0,-1)"))
    assert not hull_contains_origin(parse_stepset("N,E,S"))


def test_census_entry():
    entry = census_entry(model_by_id(1))
    assert entry.id == 1
    assert parse_stepset(entry.steps) == model_by_id(1).representative
    assert entry.group_order is None
    assert entry.symmetric == (model_by_id(1).symmetric_twin is None)
