"""Kernel construction, discriminants, branch points and genus.

The kernel of a small-step walk is xy[1 - sum p_ij x^i y^j] (probabilistic)
or xy[sum x^i y^j - 1/z] (counting), viewed as a quadratic in y with
coefficients in x, or as a quadratic in x on request.
"""

import cmath
import logging
from fractions import Fraction

import numpy as np
import sympy as sp
from scipy import optimize

from config import FQW_ROOT_TOL
from errors import (
    DegenerateKernelError,
    GenusCaseError,
    NumericError,
    ReducibleKernelError,
    ValidationError,
)
from models import (
    COUNTING,
    BranchPointReport,
    BranchRoot,
    GenusReport,
    KernelForm,
    WeightedStepSet,
)

log = logging.getLogger(__name__)

x, y, z = sp.symbols("x y z")


class PointAtInfinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"


INFINITY = PointAtInfinity()


def to_sympy(value):
    value = Fraction(value)
    return sp.Rational(value.numerator, value.denominator)


def to_fraction(value):
    value = sp.sympify(value)
    if not isinstance(value, sp.Rational):
        raise ValidationError(f"{value} is not rational")
    return Fraction(int(value.p), int(value.q))


def kernel_from_rates(rates):
    """Uniformize transition rates into a probabilistic step set."""
    rates = {s: Fraction(r) for s, r in dict(rates).items() if Fraction(r) != 0}
    total = sum(rates.values())
    if total <= 0:
        raise ValidationError("total transition rate must be positive")
    return WeightedStepSet.probabilistic({s: r / total for s, r in rates.items()})


def kernel_expression(ws, zv=None):
    total = sum(to_sympy(w) * x**i * y**j for (i, j), w in zip(ws.steps, ws.weights))
    if ws.mode == COUNTING:
        zz = z if zv is None else to_sympy(zv)
        return sp.expand(x * y * total - x * y / zz)
    return sp.expand(x * y * (1 - total))


def build_kernel(ws, z=None, orientation="y"):
    if orientation not in ("y", "x"):
        raise ValidationError(f"unknown orientation {orientation!r}")
    zv = Fraction(z) if z is not None else None
    if zv is not None and zv <= 0:
        raise ValidationError("z must be positive")

    expr = kernel_expression(ws, zv)
    if expr == 0:
        raise DegenerateKernelError("kernel vanishes identically")

    main, other = (y, x) if orientation == "y" else (x, y)
    collected = sp.Poly(expr, main)
    a, b, c = (
        sp.Poly(collected.coeff_monomial(main**d), other)
        for d in (2, 1, 0)
    )
    return KernelForm(
        a=a,
        b=b,
        c=c,
        orientation=orientation,
        source=ws,
        z_value=zv if ws.mode == COUNTING else None,
    )


def main_variable(k):
    return y if k.orientation == "y" else x


def other_variable(k):
    return x if k.orientation == "y" else y


def reconstruct(k):
    v = main_variable(k)
    return sp.expand(k.a.as_expr() * v**2 + k.b.as_expr() * v + k.c.as_expr())


def swap_orientation(k):
    return build_kernel(k.source, k.z_value, "x" if k.orientation == "y" else "y")


def discriminant(k):
    if not k.concrete:
        raise ValidationError("discriminant needs a fixed z in counting mode")
    return k.b**2 - 4 * k.a * k.c


# ===== ROOTS =====

def _polish(poly, root, tol):
    f = np.poly1d(poly)
    r, info = optimize.newton(
        f, complex(root), fprime=f.deriv(), tol=tol, rtol=tol, maxiter=60, full_output=True, disp=False
    )
    r = complex(r)
    if info.converged or abs(f(r)) <= 1e3 * tol * max(1.0, float(np.max(np.abs(poly)))):
        return r
    raise NumericError(f"root polishing did not converge near {root}")


def _factor_roots(factor, tol):
    """Roots of a squarefree irreducible rational factor."""
    if factor.degree() <= 2:
        out = []
        for r in sp.roots(factor.as_expr(), factor.gen, multiple=True):
            val = complex(sp.N(r, 30))
            if r.is_real:
                val = complex(val.real, 0.0)
            out.append((val, str(r)))
        return out
    coeffs = [float(cf) for cf in factor.all_coeffs()]
    out = []
    for guess in np.roots(coeffs):
        val = _polish(coeffs, guess, tol)
        if abs(val.imag) <= 1e-9 * max(1.0, abs(val.real)):
            val = complex(val.real, 0.0)
        out.append((val, None))
    return out


def _poly_roots(poly, tol):
    """Exact multiplicities from the squarefree decomposition, values per factor."""
    if poly.is_zero:
        raise DegenerateKernelError("discriminant vanishes identically")
    roots = []
    _, parts = poly.sqf_list()
    for part, mult in parts:
        _, factors = part.factor_list()
        for factor, _ in factors:
            for val, exact in _factor_roots(factor, tol):
                roots.append(BranchRoot(re=val.real, im=val.imag, multiplicity=mult, exact=exact))
    return roots


def branch_points(k, tol=FQW_ROOT_TOL):
    poly = discriminant(k)
    deg = poly.degree()
    roots = _poly_roots(poly, tol)

    real = sorted((r for r in roots if r.is_real), key=lambda r: r.re)
    cplx = sorted((r for r in roots if not r.is_real), key=lambda r: (r.re, r.im))
    ordered = real + cplx
    if deg < 4:
        ordered.append(BranchRoot(multiplicity=4 - deg, at_infinity=True))

    inside = [r for r in ordered if not r.at_infinity and abs(r.value) <= 1 + tol]
    ordering = [r.re for r in real for _ in range(r.multiplicity)]
    return BranchPointReport(
        variable=str(other_variable(k)),
        degree=deg,
        roots=ordered,
        inside_unit_disc=inside,
        ordering=ordering,
    )


# ===== GENUS =====

def is_irreducible(k):
    """Exact factorization of the bivariate kernel over QQ; None if inconclusive."""
    if not k.concrete:
        return None
    try:
        _, factors = sp.factor_list(reconstruct(k), x, y)
    except (sp.PolynomialError, NotImplementedError) as e:
        log.warning(f"kernel factorization inconclusive: {e}")
        return None
    nonconstant = [(f, e) for f, e in factors if sp.Poly(f, x, y).total_degree() > 0]
    return len(nonconstant) == 1 and nonconstant[0][1] == 1


def _plane_pattern(k):
    poly = discriminant(k)
    if poly.is_zero:
        raise DegenerateKernelError("discriminant vanishes identically")
    var = poly.gen
    pattern = {"0": 0, "1": 0, "inf": 4 - poly.degree()}
    _, parts = poly.sqf_list()
    for part, mult in parts:
        if part.eval(0) == 0:
            pattern["0"] = mult
        if part.eval(1) == 0:
            pattern["1"] = mult
    simple = all(m == 1 for _, m in parts) and pattern["inf"] <= 1
    pattern["simple"] = int(simple)
    return pattern, var


def multiplicity_pattern(k):
    ky = k if k.orientation == "y" else swap_orientation(k)
    kx = swap_orientation(ky)
    px, _ = _plane_pattern(ky)
    py, _ = _plane_pattern(kx)
    return {"x": px, "y": py}


def match_case(pattern):
    px, py = pattern["x"], pattern["y"]
    if px["0"] >= 2 and py["inf"] >= 2:
        return 1
    if py["0"] >= 2 and px["inf"] >= 2:
        return 2
    if px["inf"] >= 2 and py["inf"] >= 2:
        return 3
    if px["0"] >= 2 and py["0"] >= 2:
        return 4
    if px["1"] >= 2 and py["1"] >= 2:
        return 5
    return None


def genus(k):
    if not k.concrete:
        raise ValidationError("genus needs a fixed z in counting mode")
    irreducible = is_irreducible(k)
    if irreducible is False:
        raise ReducibleKernelError(f"kernel of {list(k.source.steps)} factors over QQ")

    pattern = multiplicity_pattern(k)
    irreducibility = "verified" if irreducible else "unverified"
    if pattern["x"]["simple"]:
        return GenusReport(genus=1, irreducibility=irreducibility, pattern=pattern)

    case = match_case(pattern)
    if case is None:
        raise GenusCaseError("genus 0 but no degenerate case matches", pattern)
    return GenusReport(genus=0, case=case, irreducibility=irreducibility, pattern=pattern)


def has_multiple_branch_point(k):
    """Genus-0 test without case matching (any merge of branch points)."""
    return not _plane_pattern(k)[0]["simple"]


# ===== BRANCHES =====

def _eval_exact(poly, v):
    return to_fraction(poly.eval(to_sympy(v)))


def coefficients_at(k, v):
    if not k.concrete:
        raise ValidationError("branch evaluation needs a fixed z in counting mode")
    if isinstance(v, (int, Fraction)):
        return tuple(complex(_eval_exact(p, v)) for p in k.coefficients)
    v = complex(v)
    return tuple(complex(np.polyval([float(cf) for cf in p.all_coeffs()], v)) for p in k.coefficients)


def vieta(k, v):
    """Exact (sum, product) of the two branches at a rational point."""
    a, b, c = (_eval_exact(p, v) for p in k.coefficients)
    if a == 0:
        raise ValidationError("a vanishes at the evaluation point")
    return (-b / a, c / a)


def _order_pair(r0, r1):
    m0, m1 = abs(r0), abs(r1)
    if abs(m0 - m1) <= 1e-12 * max(m0, m1, 1e-300):
        return tuple(sorted((r0, r1), key=lambda r: (r.real, r.imag)))
    return (r0, r1) if m0 < m1 else (r1, r0)


def eval_branches(k, v):
    """Both roots of the kernel quadratic at v, small-modulus branch first."""
    a, b, c = coefficients_at(k, v)
    if a == 0:
        if b == 0:
            raise ValidationError("kernel quadratic degenerates at this point")
        return (-c / b, INFINITY)

    disc = cmath.sqrt(b * b - 4 * a * c)
    if (b.conjugate() * disc).real >= 0:
        big = -(b + disc) / 2
    else:
        big = -(b - disc) / 2
    if big == 0:
        return (0j, 0j)
    return _order_pair(big / a, c / big)


def eval_branches_x(k, v):
    kx = k if k.orientation == "x" else swap_orientation(k)
    return eval_branches(kx, v)


def numeric_in_z(k):
    """Float evaluators z -> coefficient arrays of (D, a, b, c) for a formal-z kernel."""
    if k.source.mode != COUNTING:
        raise ValidationError("z-dependence only exists for counting kernels")
    kf = k if k.z_value is None else build_kernel(k.source, None, k.orientation)
    var = other_variable(kf)
    a, b, c = (sp.Poly(p.as_expr(), var) for p in kf.coefficients)
    disc = sp.Poly(sp.expand(b.as_expr() ** 2 - 4 * a.as_expr() * c.as_expr()), var)
    funcs = [sp.lambdify(z, list(p.all_coeffs()), "math") for p in (disc, a, b, c)]
    return lambda zv: tuple(np.array(f(float(zv)), dtype=float) for f in funcs)
