import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from errors import ReducibleKernelError, ValidationError
from models import CoupledProcessorsParams, JsqParams, WeightedStepSet
from services.kernel_algebra import (
    INFINITY,
    branch_points,
    build_kernel,
    discriminant,
    eval_branches,
    eval_branches_x,
    genus,
    kernel_from_rates,
    reconstruct,
    swap_orientation,
    vieta,
    x,
    y,
    z,
)
from services.queueing_analysis import coupled_kernel, jsq_kernel
from services.stepset_catalog import parse_stepset, reflect
from utils import named_rng

SIMPLE = parse_stepset("N,E,S,W")
ZERO_DRIFT_KREWERAS = WeightedStepSet.probabilistic({(1, 1): "1/3", (-1, 0): "1/3", (0, -1): "1/3"})


def random_rationals(name, count):
    rng = named_rng(7, name)
    return [Fraction(int(rng.integers(-40, 41)), int(rng.integers(1, 30))) for _ in range(count)]


def test_simple_walk_formal_coefficients():
    k = build_kernel(SIMPLE)
    assert sp.simplify(k.a.as_expr() - x) == 0
    assert sp.simplify(k.b.as_expr() - (x**2 + 1 - x / z)) == 0
    assert sp.simplify(k.c.as_expr() - x) == 0


def test_no_downward_step_gives_zero_c():
    k = build_kernel(parse_stepset("N,E,W"), Fraction(1, 5))
    assert k.c.is_zero


def test_uniform_probabilistic_matches_expansion():
    steps = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
    ws = WeightedStepSet.probabilistic({s: Fraction(1, 8) for s in steps})
    brute = sp.expand(x * y * (1 - sp.Rational(1, 8) * sum(x**i * y**j for i, j in steps)))
    assert sp.expand(reconstruct(build_kernel(ws)) - brute) == 0


def test_x_orientation_is_same_polynomial():
    k = build_kernel(SIMPLE, Fraction(1, 5))
    assert sp.expand(reconstruct(k) - reconstruct(swap_orientation(k))) == 0


def test_kernel_from_rates_normalizes():
    ws = kernel_from_rates({(1, 0): 1, (0, 1): 1, (-1, 0): 2, (0, -1): 4})
    assert sum(ws.weights) == 1
    assert ws.weight(0, -1) == Fraction(1, 2)
    with pytest.raises(ValidationError):
        kernel_from_rates({(1, 0): 0})


def test_discriminant_simple_walk():
    d = discriminant(build_kernel(SIMPLE, Fraction(1, 5)))
    assert sp.expand(d.as_expr() - ((x**2 + 1 - 5 * x) ** 2 - 4 * x**2)) == 0


def test_discriminant_needs_fixed_z():
    with pytest.raises(ValidationError):
        discriminant(build_kernel(SIMPLE))


def test_perfect_square_discriminant_has_even_multiplicities():
    report = branch_points(build_kernel(parse_stepset("N,E,W"), Fraction(1, 5)))
    assert all(r.multiplicity % 2 == 0 for r in report.roots if not r.at_infinity)


def test_zero_drift_discriminant_vanishes_at_one():
    d = discriminant(build_kernel(ZERO_DRIFT_KREWERAS))
    assert d.eval(1) == 0


def test_branch_points_simple_walk():
    report = branch_points(build_kernel(SIMPLE, Fraction(1, 5)))
    expected = [(7 - math.sqrt(45)) / 2, (3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2, (7 + math.sqrt(45)) / 2]
    assert report.degree == 4
    assert report.ordering == pytest.approx(expected, abs=1e-12)
    assert len(report.inside_unit_disc) == 2


def test_branch_points_merge_at_quarter():
    report = branch_points(build_kernel(SIMPLE, Fraction(1, 4)))
    double = [r for r in report.roots if r.multiplicity == 2]
    assert len(double) == 1
    assert double[0].re == pytest.approx(1.0)


def test_jsq_y_plane_branch_points():
    k = jsq_kernel(JsqParams(alpha=1, beta=2, lam=1), which=1)
    report = branch_points(swap_orientation(k))
    assert report.variable == "y"
    assert report.ordering == pytest.approx([1 / 3, 1.0], abs=1e-12)
    assert report.roots[-1].at_infinity


def test_genus_generic():
    g = genus(build_kernel(SIMPLE, Fraction(1, 5)))
    assert g.genus == 1
    assert g.case is None


def test_genus_zero_drift_case_five():
    g = genus(build_kernel(ZERO_DRIFT_KREWERAS))
    assert (g.genus, g.case) == (0, 5)


@pytest.mark.parametrize("which", [1, 2])
def test_genus_jsq_case_three(which):
    g = genus(jsq_kernel(JsqParams(alpha=1, beta=2, lam=1), which=which))
    assert (g.genus, g.case) == (0, 3)


def test_genus_rejects_reducible_kernel():
    with pytest.raises(ReducibleKernelError):
        genus(build_kernel(parse_stepset("N,S"), Fraction(1, 3)))


def test_vieta_on_random_points():
    k = build_kernel(parse_stepset("(1,1),(-1,0),(0,-1),N"), Fraction(1, 7))
    for v in random_rationals("vieta", 20):
        if v in (0, -1):
            continue
        total, product = vieta(k, v)
        y0, y1 = eval_branches(k, complex(v))
        assert y0 + y1 == pytest.approx(complex(total), rel=1e-9, abs=1e-9)
        assert y0 * y1 == pytest.approx(complex(product), rel=1e-9, abs=1e-9)


def test_coupled_branch_product():
    params = CoupledProcessorsParams(lambda1=1, lambda2=2, mu1=3, mu2=5, mu1_star=4, mu2_star=6)
    k = coupled_kernel(params)
    for v in random_rationals("coupled", 20):
        if v == 0:
            continue
        assert vieta(k, v)[1] == Fraction(5, 2)


def test_small_branch_inside_unit_disc():
    k = build_kernel(SIMPLE, Fraction(1, 5))
    for t in np.linspace(0.01, 2 * math.pi, 50):
        y0, y1 = eval_branches(k, cmath.exp(1j * t))
        assert abs(y0) <= 1 + 1e-12
        assert abs(y0) <= abs(y1)


ERGODIC_RATES = [
    {(1, 0): 1, (0, 1): 1, (-1, 0): 3, (0, -1): 3},
    {(1, 0): 2, (0, 1): 2, (-1, 0): 3, (0, -1): 3},
    {(1, 1): 2, (-1, 0): 3, (0, -1): 3},
    {(1, 0): 1, (0, 1): 2, (-1, 0): 3, (0, -1): 4},
    {(1, 1): 1, (-1, -1): 3, (-1, 0): 1, (0, -1): 1},
    {(1, 0): 1, (0, 1): 1, (-1, -1): 3},
    {(1, 1): 2, (-1, 0): 4, (0, -1): 4, (1, -1): 1},
    {(1, 0): 2, (0, 1): 2, (-1, 0): 4, (0, -1): 4, (-1, 1): 1, (1, -1): 1},
    {(1, 0): 1, (0, 1): 1, (1, 1): 1, (-1, 0): 2, (0, -1): 2, (-1, -1): 2, (-1, 1): 1, (1, -1): 1},
]


def test_ergodic_probabilistic_branches_inside_disc():
    kernels = [build_kernel(kernel_from_rates(rates)) for rates in ERGODIC_RATES]
    kernels.append(coupled_kernel(CoupledProcessorsParams(lambda1=1, lambda2=2, mu1=3, mu2=5, mu1_star=4, mu2_star=6)))
    assert len(kernels) == 10
    for k in kernels:
        for t in np.linspace(0.05, 2 * math.pi, 50):
            y0, _ = eval_branches(k, cmath.exp(1j * t))
            assert abs(y0) <= 1 + 1e-9


def test_branches_at_degenerate_leading_coefficient():
    k = build_kernel(SIMPLE, Fraction(1, 5))
    y0, y1 = eval_branches(k, 0)
    assert y0 == 0
    assert y1 is INFINITY


def test_x_branches_simple_walk():
    k = build_kernel(SIMPLE, Fraction(1, 5))
    x0, x1 = eval_branches_x(k, 0.5)
    assert x0 == pytest.approx(0.5, abs=1e-12)
    assert x1 == pytest.approx(2.0, abs=1e-12)


def test_x_branches_match_reflected_walk():
    ws = parse_stepset("(1,1),(-1,0),(0,-1),N")
    k = build_kernel(ws, Fraction(1, 7))
    mirror = build_kernel(reflect(ws), Fraction(1, 7))
    for v in (0.3, -0.7, 0.4 + 0.5j, 2.5):
        assert eval_branches_x(k, v) == pytest.approx(eval_branches(mirror, v), abs=1e-12)


@pytest.mark.parametrize("spec", ["(1,1),(-1,0),(0,-1),N", "N,SE,W,S", "(1,0),(-1,0),(1,1),(-1,-1)"])
def test_orientations_agree_under_reflection(spec):
    ws = parse_stepset(spec)
    y_plane = branch_points(swap_orientation(build_kernel(ws, Fraction(1, 9))))
    x_plane = branch_points(build_kernel(reflect(ws), Fraction(1, 9)))
    assert y_plane.variable == "y"
    assert x_plane.variable == "x"
    assert y_plane.degree == x_plane.degree
    assert y_plane.ordering == pytest.approx(x_plane.ordering, abs=1e-12)


@pytest.mark.parametrize("k", [
    build_kernel(SIMPLE, Fraction(1, 5)),
    build_kernel(SIMPLE, Fraction(1, 4)),
    build_kernel(parse_stepset("(1,1),(-1,0),(0,-1),N"), Fraction(1, 7)),
    build_kernel(ZERO_DRIFT_KREWERAS),
    jsq_kernel(JsqParams(alpha=1, beta=2, lam=1)),
])
def test_genus_ignores_orientation(k):
    g, h = genus(k), genus(swap_orientation(k))
    assert (g.genus, g.case) == (h.genus, h.case)


@pytest.mark.parametrize("rates", ERGODIC_RATES[1:4])
def test_genus_one_has_two_real_branch_points_in_disc(rates):
    k = build_kernel(kernel_from_rates(rates))
    assert genus(k).genus == 1
    report = branch_points(k)
    inside = [r for r in report.inside_unit_disc if r.is_real]
    assert sum(r.multiplicity for r in inside) == 2
    assert len(report.inside_unit_disc) == len(inside)
    assert all(abs(r.re) < 1 for r in inside)
