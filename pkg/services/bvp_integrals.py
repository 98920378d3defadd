"""Explicit integrals of the simple walk and the excursion singularity z_g.

F(0,0,z) = (1/pi) int_{-1}^{1} g(u) sqrt(1-u^2) du
F(1,0,z) = (1/2pi) int_{-1}^{1} g(u) sqrt((1+u)/(1-u)) du
with g(u) = (A - sqrt(A^2 - 4z^2)) / z^2 and A = 1 - 2uz, evaluated in the
cancellation-free form g = 4 / (A + sqrt(A^2 - 4z^2)).
"""

import logging
import math
from fractions import Fraction

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from config import FQW_QUAD_ABS_TOL, FQW_QUAD_MAX_REFINEMENT, FQW_ZG_TOL
from errors import NumericError, ValidationError
from models import COUNTING, IntegralRow, IntegralResult, QuadratureSpec, SingularityReport
from services.enumeration import count_walks, project_series, series_value
from services.kernel_algebra import build_kernel, has_multiple_branch_point, numeric_in_z
from services.stepset_catalog import format_stepset, hull_contains_origin, parse_stepset

log = logging.getLogger(__name__)

SIMPLE_WALK = "N,E,S,W"
ZG_LOWER = 1e-6
REAL_TOL = 1e-7
MERGE_TOL = 1e-6


def default_quadrature():
    return QuadratureSpec(abs_tol=FQW_QUAD_ABS_TOL, max_refinement=FQW_QUAD_MAX_REFINEMENT)


def _check_z(zv):
    if not 0 < zv < 0.25:
        raise ValidationError(f"z = {zv} outside (0, 1/4)")


def _g(u, zv):
    big_a = 1.0 - 2.0 * u * zv
    disc = big_a * big_a - 4.0 * zv * zv
    if disc < 0:
        raise NumericError(f"integrand not real at u={u}, z={zv}")
    return 4.0 / (big_a + math.sqrt(disc))


def _quad(f, lo, hi, q, wvar):
    # QUADPACK algebraic-weight rule: (x - lo)^wvar[0] (hi - x)^wvar[1]
    result = integrate.quad(
        f, lo, hi,
        weight="alg", wvar=wvar,
        epsabs=q.abs_tol, epsrel=0.0,
        limit=q.max_refinement, full_output=1,
    )
    value, err = result[0], result[1]
    if len(result) > 3 and err > max(100 * q.abs_tol, 1e-10):
        raise NumericError(f"quadrature did not converge: {result[3]} (error {err:.3g})")
    return value


def simple_walk_F00(zv, q=None):
    q = q or default_quadrature()
    _check_z(zv)
    # sqrt(1 - u^2) = (u + 1)^(1/2) (1 - u)^(1/2)
    return _quad(lambda u: _g(u, zv), -1.0, 1.0, q, (0.5, 0.5)) / math.pi


def simple_walk_F10(zv, q=None):
    q = q or default_quadrature()
    _check_z(zv)
    root2 = math.sqrt(2.0)
    # u = 1 - t^2 removes (1-u)^(-1/2); sqrt(2 - t^2) = sqrt(root2 + t) sqrt(root2 - t)
    value = _quad(lambda t: 2.0 * _g(1.0 - t * t, zv) * math.sqrt(root2 + t), 0.0, root2, q, (0.0, 0.5))
    return value / (2.0 * math.pi)


def simple_walk_F01(zv, q=None):
    return simple_walk_F10(zv, q)


def integral_table(which, z_grid, N=400, q=None):
    evaluate = {"F00": simple_walk_F00, "F10": simple_walk_F10}[which]
    table = count_walks(parse_stepset(SIMPLE_WALK), N)
    series = project_series(table, "F00" if which == "F00" else "F10_axis")
    rows = []
    for zv in z_grid:
        value = evaluate(zv, q)
        oracle = series_value(series, zv)
        rows.append(IntegralRow(z=zv, integral=value, series=oracle, diff=abs(value - oracle)))
    return IntegralResult(which=which, rows=rows)


def integral_frame(result):
    return pd.DataFrame(
        [row.model_dump() for row in result.rows],
        columns=["z", "integral", "series", "diff"],
    )


# ===== SINGULARITY =====

def _positive_real_roots(coeffs):
    roots = np.roots(coeffs)
    real = [r.real for r in roots if abs(r.imag) <= REAL_TOL * max(1.0, abs(r.real)) and r.real > 0]
    return sorted(real)


def _merge_pair(evaluate, zv):
    """(y2, y3): consecutive positive branch points enclosing real positive x-roots."""
    disc, a, b, c = evaluate(zv)
    ys = _positive_real_roots(disc)
    for lo, hi in zip(ys, ys[1:]):
        mid = 0.5 * (lo + hi)
        av, bv, cv = (np.polyval(p, mid) for p in (a, b, c))
        if bv * bv - 4 * av * cv >= 0 and av != 0 and -bv / av > 0:
            return lo, hi
    return None


def double_root_near(evaluate, zv, pair):
    """True when the branch-point polynomial at zv has a double root by the pair.

    The candidate is the real critical point of D closest to the pair, so D'
    vanishes there; D itself must vanish relative to the size of its terms.
    """
    disc = evaluate(zv)[0]
    lo, hi = pair
    mid, width = 0.5 * (lo + hi), max(hi - lo, 1e-6)
    critical = [r.real for r in np.roots(np.polyder(disc)) if abs(r.imag) <= REAL_TOL * max(1.0, abs(r.real))]
    near = [r for r in critical if abs(r - mid) <= width]
    if not near:
        return False
    yc = min(near, key=lambda r: abs(r - mid))
    scale = float(np.polyval(np.abs(disc), abs(yc)))
    return abs(float(np.polyval(disc, yc))) <= MERGE_TOL * scale


def _genus_at(ws, zv):
    return 0 if has_multiple_branch_point(build_kernel(ws, zv)) else 1


def compute_zg(ws, tol=FQW_ZG_TOL):
    if ws.mode != COUNTING:
        raise ValidationError("z_g is defined for counting models")
    if not hull_contains_origin(ws):
        raise NumericError(f"{format_stepset(ws)}: excursion series has no branch-merge singularity")

    evaluate = numeric_in_z(build_kernel(ws, orientation="x"))

    def sign(zv):
        return 1.0 if _merge_pair(evaluate, zv) is not None else -1.0

    lo, hi = ZG_LOWER, 1.0 / ws.size
    if sign(lo) < 0:
        raise NumericError(f"no branch pair at z = {lo}")
    # the lower bound 1/|S| can sit exactly on the merge point; grow past it
    for _ in range(60):
        if sign(hi) < 0:
            break
        hi *= 1.25
    else:
        raise NumericError("no sign change found while growing the z bracket")

    bracket = (lo, hi)
    zg = optimize.bisect(sign, lo, hi, xtol=tol, maxiter=400)
    below = _merge_pair(evaluate, zg - tol)
    if below is None:
        below = _merge_pair(evaluate, zg - 10 * tol)
    if below is None:
        raise NumericError("branch pair lost just below z_g")

    flags = []
    z_below = Fraction(zg - 1e-4).limit_denominator(10**9)
    genus_below = _genus_at(ws, z_below)

    exact = Fraction(zg).limit_denominator(10**6)
    z_exact = None
    if abs(float(exact) - zg) <= 10 * tol and _genus_at(ws, exact) == 0:
        genus_at, z_exact = 0, f"{exact.numerator}/{exact.denominator}"
    else:
        genus_at = 0 if double_root_near(evaluate, zg, below) else 1
        flags.append("genus_at_zg_numeric")
        if genus_at:
            log.warning(f"no double branch point found at z_g for {format_stepset(ws)}")

    log.info(f"z_g({format_stepset(ws)}) = {zg:.12f}")
    return SingularityReport(
        steps=format_stepset(ws),
        z_g=zg,
        bracket=bracket,
        merged_pair=below,
        tolerance=tol,
        genus_below=genus_below,
        genus_at=genus_at,
        z_g_exact=z_exact,
        flags=flags,
    )
