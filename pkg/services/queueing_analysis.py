"""Ergodicity criteria and explicit formulas for the two-queue models.

Boundary generating functions follow one convention throughout:
q(x, y) = x * sum_{x-axis jumps} rate * (x^i y^j - 1) and
q~(x, y) = y * sum_{y-axis jumps} rate * (x^i y^j - 1). Rates are left
unnormalized; only signs enter the criterion.
"""

import logging
import math
from fractions import Fraction

import numpy as np
import sympy as sp
from scipy import integrate

from config import FQW_QUAD_ABS_TOL, FQW_QUAD_MAX_REFINEMENT
from errors import CriterionInapplicableError, NonErgodicError, NumericError, ValidationError
from models import (
    AlternatingParams,
    CoupledProcessorsParams,
    ErgodicityFlags,
    ErgodicityModel,
    JsqBranchPoints,
    JsqParams,
    QuadratureSpec,
)
from services.kernel_algebra import (
    build_kernel,
    eval_branches,
    eval_branches_x,
    kernel_from_rates,
    reconstruct,
    to_sympy,
    x,
    y,
)
from utils import as_fraction

log = logging.getLogger(__name__)

FD_STEP = 1e-6


def _boundary(jumps, var):
    total = sum(to_sympy(r) * (x**i * y**j - 1) for (i, j), r in jumps.items())
    return sp.expand(var * total)


def walk_ergodicity_model(interior, x_axis, y_axis, name="walk"):
    """Ergodicity model of a quadrant walk given by jump rates per region."""
    kernel = build_kernel(kernel_from_rates(interior))
    q = _boundary({s: r for s, r in dict(x_axis).items() if r}, x)
    q_tilde = _boundary({s: r for s, r in dict(y_axis).items() if r}, y)
    for g, label in ((q, "q"), (q_tilde, "q~")):
        if g.subs({x: 1, y: 1}) != 0:
            raise ValidationError(f"{label}(1,1) must vanish")
    return ErgodicityModel(name=name, kernel=kernel, q=q, q_tilde=q_tilde)


# ===== MODEL KERNELS =====

def coupled_kernel(p):
    rates = {(1, 0): p.lambda1, (0, 1): p.lambda2, (-1, 0): p.mu1, (0, -1): p.mu2}
    return build_kernel(kernel_from_rates(rates))


def coupled_ergodicity_model(p):
    arrivals = {(1, 0): p.lambda1, (0, 1): p.lambda2}
    return walk_ergodicity_model(
        {**arrivals, (-1, 0): p.mu1, (0, -1): p.mu2},
        {**arrivals, (-1, 0): p.mu1_star},
        {**arrivals, (0, -1): p.mu2_star},
        name="coupled",
    )


def jsq_kernel(p, which=1):
    """Kernel R_1 (region m <= n) or R_2 (n <= m) in the shifted coordinates."""
    if which not in (1, 2):
        raise ValidationError("which must be 1 or 2")
    up, down = (p.alpha, p.beta) if which == 1 else (p.beta, p.alpha)
    return build_kernel(kernel_from_rates({(1, -1): p.lam, (-1, 1): up, (0, -1): down}))


# ===== CRITERION =====

def _other_root_at_one(k):
    """The second root of the kernel quadratic at 1 (the first one is 1)."""
    a1, c1 = k.a.eval(1), k.c.eval(1)
    if a1 == 0:
        return sp.oo
    return c1 / a1


def _small_branch_at_one(k, label):
    r = _other_root_at_one(k)
    if r == 1:
        raise CriterionInapplicableError(
            f"{label}: 1 is a branch point (zero drift), criterion inapplicable"
        )
    return (Fraction(1), r) if r > 1 else (Fraction(int(r.p), int(r.q)), r)


def _is_exact(expr):
    return not expr.atoms(sp.Float)


def _implicit_derivative(kernel_expr, g, var):
    """d g(var, W(var)) / d var at (1,1), with W the branch of the kernel through (1,1)."""
    other = y if var == x else x
    at = {x: 1, y: 1}
    k_var = sp.diff(kernel_expr, var).subs(at)
    k_other = sp.diff(kernel_expr, other).subs(at)
    if k_other == 0:
        raise CriterionInapplicableError("kernel gradient degenerates at (1,1)")
    return sp.diff(g, var).subs(at) - sp.diff(g, other).subs(at) * k_var / k_other


def _finite_difference(model, var):
    branches = eval_branches if var == x else eval_branches_x
    g = sp.lambdify((x, y), model.q if var == x else model.q_tilde, "math")

    def along(t):
        w = branches(model.kernel, t)[0].real
        return g(t, w) if var == x else g(w, t)

    return (along(1 + FD_STEP) - along(1 - FD_STEP)) / (2 * FD_STEP)


def ergodicity_flags(m):
    ky = m.kernel if m.kernel.orientation == "y" else build_kernel(m.kernel.source)
    kx = build_kernel(ky.source, orientation="x")
    y0, _ = _small_branch_at_one(ky, "Y0(1)")
    x0, _ = _small_branch_at_one(kx, "X0(1)")
    x0_float = eval_branches_x(ky, 1)[0].real
    if abs(x0_float - float(x0)) > 1e-9:
        raise NumericError(f"X0(1) mismatch for {m.name}: {x0_float} vs {x0}")

    exact = _is_exact(m.q) and _is_exact(m.q_tilde)
    method = "implicit" if exact else "finite_difference"
    kernel_expr = reconstruct(ky)

    def side(at_one, g, var):
        if at_one != 1:
            return 0
        if exact:
            d = _implicit_derivative(kernel_expr, g, var)
        else:
            d = _finite_difference(m, var)
        if d == 0:
            raise CriterionInapplicableError(f"boundary derivative vanishes for {m.name}")
        return 1 if d < 0 else 0

    delta = side(y0, m.q, x)
    delta_tilde = side(x0, m.q_tilde, y)
    both = int(x0 == 1 and y0 == 1)
    ergodic = delta + delta_tilde == both + 1
    log.debug(f"{m.name}: delta={delta} delta~={delta_tilde} X0(1)={x0} Y0(1)={y0}")
    return ErgodicityFlags(
        delta=delta,
        delta_tilde=delta_tilde,
        ergodic=ergodic,
        x0_at_1=float(x0),
        y0_at_1=float(y0),
        derivative_method=method,
    )


def work_load(p):
    return p.lambda1 / p.mu1_star + p.lambda2 / p.mu2_star


def is_ergodic(params):
    """(ergodic, predicate, flags) for any of the three queue models."""
    if isinstance(params, JsqParams):
        return params.lam < params.alpha + params.beta, "lambda < alpha + beta", None

    if isinstance(params, AlternatingParams):
        return params.rho1 + params.rho2 < 1, "rho1 + rho2 < 1", None

    if isinstance(params, CoupledProcessorsParams):
        if params.processor_sharing:
            try:
                flags = ergodicity_flags(coupled_ergodicity_model(params))
            except CriterionInapplicableError as e:
                log.info(f"criterion skipped under processor sharing: {e.detail}")
                flags = None
            ergodic = work_load(params) < 1
            if flags is not None and flags.ergodic != ergodic:
                log.warning("criterion and work-conservation predicate disagree")
            return ergodic, "1 - lambda1/mu1* - lambda2/mu2* > 0", flags
        flags = ergodicity_flags(coupled_ergodicity_model(params))
        return flags.ergodic, "delta + delta~ = 1{X0(1)=1, Y0(1)=1} + 1", flags

    raise ValidationError(f"unsupported model {type(params).__name__}")


def require_ergodic(params):
    ergodic, predicate, _ = is_ergodic(params)
    if not ergodic:
        raise NonErgodicError(f"{params.model} parameters violate {predicate}")


# ===== JSQ =====

def jsq_branch_points(alpha, beta, lam):
    a, b, l = (as_fraction(v) for v in (alpha, beta, lam))
    if min(a, b, l) <= 0:
        raise ValidationError("JSQ rates must be positive")
    s = a + b + l
    den_ab, den_ba = s * s - 4 * a * l, s * s - 4 * b * l
    if den_ab <= 0 or den_ba <= 0:
        raise ValidationError("s^2 <= 4 alpha lambda: outside the model")

    fs = float(s)
    r_al, r_bl = math.sqrt(float(a * l)), math.sqrt(float(b * l))
    return JsqBranchPoints(
        s=s,
        x_star_ab=4 * a * b / den_ab,
        x_star_ba=4 * a * b / den_ba,
        y1_ab=float(b) / (fs + 2 * r_al),
        y2_ab=float(b) / (fs - 2 * r_al),
        y1_ba=float(a) / (fs + 2 * r_bl),
        y2_ba=float(a) / (fs - 2 * r_bl),
    )


# ===== COUPLED PROCESSORS =====

def _floats(p):
    return {k: float(getattr(p, k)) for k in ("lambda1", "lambda2", "mu1", "mu2", "mu1_star", "mu2_star")}


def coupled_K(theta, p):
    """Small root of l1 K^2 - (l1 + m1 + beta(theta)) K + m1 = 0."""
    f = _floats(p)
    theta = np.asarray(theta, dtype=float)
    beta = f["lambda2"] + f["mu2"] - 2.0 * math.sqrt(f["lambda2"] * f["mu2"]) * np.cos(theta)
    big_b = f["lambda1"] + f["mu1"] + beta
    disc = np.sqrt(big_b * big_b - 4.0 * f["lambda1"] * f["mu1"])
    return 2.0 * f["mu1"] / (big_b + disc)


def coupled_K_residual(theta, p):
    f = _floats(p)
    k = coupled_K(theta, p)
    beta = f["lambda2"] + f["mu2"] - 2.0 * math.sqrt(f["lambda2"] * f["mu2"]) * np.cos(theta)
    return f["lambda1"] * k * k - (f["lambda1"] + f["mu1"] + beta) * k + f["mu1"]


def empty_probability(p):
    """F(0,0) under processor sharing, from work conservation."""
    return 1 - work_load(p)


def _v_derived(theta, p, f, f00):
    r = math.sqrt(f["mu2"] / f["lambda2"])
    qq = f["mu2"] - f["mu2_star"]
    big_a = 1.0 - 1.0 / coupled_K(theta, p)
    re = f["mu1"] * big_a + qq - (qq / r) * math.cos(theta)
    im = (qq / r) * math.sin(theta)
    return 2.0 * f00 * f["mu1_star"] * qq * big_a * math.sin(theta) / (r * (re * re + im * im))


def _v_printed(theta, p, f, f00):
    xi = f["mu1"] / f["mu1_star"]
    rho1 = f["lambda1"] / f["mu1_star"]
    k = coupled_K(theta, p)
    den = xi * (
        rho1 * (f["mu2_star"] - f["mu1_star"]) * k * k
        + (f["mu1_star"] - f["mu2_star"] + f["lambda1"] + f["lambda2"]) * k
        - f["mu1_star"]
    )
    return -f["lambda2"] * math.sin(theta) * k / den


V_VARIANTS = {"derived": _v_derived, "printed": _v_printed}


def coupled_F0(zv, p, q=None, variant="derived"):
    """F(0, sqrt(mu2/lambda2) z) - F(0,0) for head-of-line processor sharing."""
    if variant not in V_VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    if not p.processor_sharing:
        raise ValidationError("coupled_F0 needs the processor-sharing constraint pq = mu1 mu2")
    if p.lambda2 == 0:
        raise ValidationError("lambda2 must be positive")
    require_ergodic(p)
    if not 0 <= zv < 1:
        raise ValidationError(f"z = {zv} outside [0, 1)")
    if zv == 0:
        return 0.0

    q = q or QuadratureSpec(abs_tol=FQW_QUAD_ABS_TOL, max_refinement=FQW_QUAD_MAX_REFINEMENT)
    f = _floats(p)
    f00 = float(empty_probability(p))
    v = V_VARIANTS[variant]

    def integrand(theta):
        return zv * math.sin(theta) * v(theta, p, f, f00) / (zv * zv - 2.0 * zv * math.cos(theta) + 1.0)

    result = integrate.quad(integrand, 0.0, math.pi, epsabs=q.abs_tol, epsrel=0.0, limit=q.max_refinement, full_output=1)
    value, err = result[0], result[1]
    if len(result) > 3 and err > max(100 * q.abs_tol, 1e-10):
        raise NumericError(f"coupled_F0 quadrature did not converge (error {err:.3g})")
    return value / math.pi


PRINTED_GAP = 0.01


def compare_v_variants(p, z_values):
    """Derived and printed F(0, .) side by side, with their largest relative gap."""
    derived = {repr(zv): coupled_F0(zv, p) for zv in z_values}
    printed = {repr(zv): coupled_F0(zv, p, variant="printed") for zv in z_values}
    gaps = [abs(printed[key] - value) / abs(value) for key, value in derived.items() if value != 0]
    return derived, printed, max(gaps, default=0.0)


def discrepancy_notes(derived, printed, gap, estimate=None, zv=None):
    notes = []
    if gap > PRINTED_GAP:
        notes.append("printed_v_discrepancy")
    if estimate is None or zv is None or estimate.functional != "pgf_q2_on_q1_empty":
        return notes
    key = repr(zv)
    band = 3 * estimate.std_error
    for label, values in (("derived", derived), ("printed", printed)):
        if key in values and abs(values[key] - estimate.value) > band:
            notes.append(f"{label}_v_disagrees_with_simulation")
    return notes
