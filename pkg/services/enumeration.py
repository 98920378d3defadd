"""Exact walk counts by dynamic programming, series projections and growth fits.

Layers are numpy object arrays holding Python ints, so every count is exact.
"""

import logging
import math
from fractions import Fraction

import numpy as np
import pandas as pd

from errors import ValidationError
from models import COUNTING, CountTable, FitResult, TruncatedSeries
from utils import number_to_str

log = logging.getLogger(__name__)

TARGETS = ("F00", "F10_axis", "F01_axis", "F11_total")

# amplitude laws of the simple walk: (constant, growth, polynomial exponent, stride)
SIMPLE_WALK_LAWS = {
    "F00": (4 / math.pi, 16, 3, 2),
    "F10_axis": (8 / math.pi, 4, 2, 1),
    "F11_total": (4 / math.pi, 4, 1, 1),
}


def _shift_add(dest, src, a, b):
    # dest[i, j] += src[i - a, j - b], sources outside the quadrant dropped
    n0, m0 = src.shape
    n1, m1 = dest.shape
    i_lo, i_hi = max(0, a), min(n1, n0 + a)
    j_lo, j_hi = max(0, b), min(m1, m0 + b)
    if i_lo < i_hi and j_lo < j_hi:
        dest[i_lo:i_hi, j_lo:j_hi] += src[i_lo - a:i_hi - a, j_lo - b:j_hi - b]


def _zeros(n):
    return np.zeros((n, n), dtype=object)


def count_walks(ws, N, keep_layers=False, excursions_only=False):
    if ws.mode != COUNTING:
        raise ValidationError("walk counting needs a counting-mode step set")
    if N < 0:
        raise ValidationError("N must be nonnegative")

    layer = _zeros(1)
    layer[0, 0] = 1
    layers = [layer.copy()] if keep_layers else None
    excursions, x_axis, y_axis, totals = [1], [1], [1], [1]

    for k in range(1, N + 1):
        size = k + 1
        if excursions_only:
            # cells farther than N - k from the axes never return
            size = min(size, N - k + 1)
        nxt = _zeros(size)
        for a, b in ws.steps:
            _shift_add(nxt, layer, a, b)
        layer = nxt

        excursions.append(int(layer[0, 0]))
        if not excursions_only:
            x_axis.append(int(layer[:, 0].sum()))
            y_axis.append(int(layer[0, :].sum()))
            totals.append(int(layer.sum()))
        if keep_layers:
            layers.append(layer.copy())

    log.debug(f"counted walks of {list(ws.steps)} up to length {N}")
    if excursions_only:
        x_axis, y_axis, totals = [], [], []
    return CountTable(
        stepset=ws,
        N=N,
        excursions=excursions,
        x_axis=x_axis,
        y_axis=y_axis,
        totals=totals,
        layers=layers,
    )


def project_series(t, target):
    if isinstance(target, tuple):
        kind, x0, y0 = target
        if kind != "slice":
            raise ValidationError(f"unknown projection {target!r}")
        return _slice(t, Fraction(x0), Fraction(y0))

    columns = {
        "F00": t.excursions,
        "F10_axis": t.x_axis,
        "F01_axis": t.y_axis,
        "F11_total": t.totals,
    }
    if target not in columns:
        raise ValidationError(f"unknown projection {target!r}")
    if len(columns[target]) != t.N + 1:
        raise ValidationError(f"{target} not available from an excursions-only table")
    return TruncatedSeries(name=target, coefficients=list(columns[target]))


def _slice(t, x0, y0):
    if t.layers is None:
        if x0 == 1 and y0 == 1 and t.totals:
            return TruncatedSeries(name="slice(1,1)", coefficients=list(t.totals))
        raise ValidationError("slice evaluation needs a table built with keep_layers=True")
    coeffs = []
    for layer in t.layers:
        n = layer.shape[0]
        px = np.array([x0**i for i in range(n)], dtype=object)
        py = np.array([y0**j for j in range(n)], dtype=object)
        value = px.dot(layer).dot(py)
        coeffs.append(value.numerator if isinstance(value, Fraction) and value.denominator == 1 else value)
    return TruncatedSeries(name=f"slice({x0},{y0})", coefficients=coeffs)


def _embed(layer, size):
    out = _zeros(size)
    n = layer.shape[0]
    out[:n, :n] = layer
    return out


def verify_cgf_equation(ws, N):
    """Largest coefficient of xy(zS-1)F - [z c(x)F(x,0) + z c~(y)F(0,y) - z d F(0,0) - xy]."""
    if N < 2:
        raise ValidationError("N must be at least 2")
    table = count_walks(ws, N, keep_layers=True)
    size = N + 3
    layers = [_embed(layer, size) for layer in table.layers]
    corner = 1 if (-1, -1) in ws.steps else 0

    worst = 0
    for k in range(N + 1):
        lhs = _zeros(size)
        rhs = _zeros(size)
        _shift_add(lhs, -layers[k], 1, 1)
        if k == 0:
            rhs[1, 1] -= 1
        else:
            prev = layers[k - 1]
            for a, b in ws.steps:
                _shift_add(lhs, prev, a + 1, b + 1)
            bottom = _zeros(size)
            bottom[:, 0] = prev[:, 0]
            left = _zeros(size)
            left[0, :] = prev[0, :]
            for a, b in ws.steps:
                if b == -1:
                    _shift_add(rhs, bottom, a + 1, 0)
                if a == -1:
                    _shift_add(rhs, left, 0, b + 1)
            rhs[0, 0] -= corner * prev[0, 0]
        diff = lhs - rhs
        worst = max(worst, max(abs(int(v)) for v in diff.flat))
    return worst


def _log(value):
    value = Fraction(value)
    return math.log(value.numerator) - math.log(value.denominator)


def asymptotic_fit(s, stride=1):
    """Fit log f(stride*m) = m log rho - gamma log m + const on the tail half."""
    if stride not in (1, 2):
        raise ValidationError("stride must be 1 or 2")
    points = [
        (k // stride, c)
        for k, c in enumerate(s.coefficients)
        if k % stride == 0 and k > 0 and c != 0
    ]
    if len(points) < 12:
        raise ValidationError(f"only {len(points)} nonzero coefficients at stride {stride}, need 12")

    tail = points[len(points) // 2:]
    m = np.array([p[0] for p in tail], dtype=float)
    logs = np.array([_log(p[1]) for p in tail])
    design = np.column_stack([m, -np.log(m), np.ones_like(m)])
    coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
    residual = logs - design @ coef
    return FitResult(
        rho=float(math.exp(coef[0])),
        gamma=float(coef[1]),
        quality=float(np.sqrt(np.mean(residual**2))),
        points=len(tail),
    )


def ratio_sequence(s, n_range, law):
    """f(stride*n) / (C rho^n / n^gamma) for the named simple-walk law."""
    const, rho, gamma, stride = SIMPLE_WALK_LAWS[law]
    out = []
    for n in n_range:
        value = Fraction(s.coefficients[stride * n], rho**n) * n**gamma
        out.append(float(value) / const)
    return out


def series_value(s, zv):
    return math.fsum(float(c) * zv**k for k, c in enumerate(s.coefficients))


def series_to_frame(s):
    return pd.DataFrame({
        "k": list(range(len(s.coefficients))),
        "coefficient": [str(number_to_str(c)) for c in s.coefficients],
    })


def table_to_sparse(t):
    if t.layers is None:
        raise ValidationError("sparse export needs a table built with keep_layers=True")
    entries = []
    for k, layer in enumerate(t.layers):
        rows, cols = np.nonzero(layer != 0)
        for i, j in zip(rows.tolist(), cols.tolist()):
            entries.append({"i": i, "j": j, "k": k, "count": str(layer[i, j])})
    return {"N": t.N, "steps": [list(s) for s in t.stepset.steps], "counts": entries}


def table_to_frame(t):
    columns = {"k": list(range(t.N + 1))}
    for target in TARGETS:
        values = {"F00": t.excursions, "F10_axis": t.x_axis, "F01_axis": t.y_axis, "F11_total": t.totals}[target]
        if len(values) == t.N + 1:
            columns[target] = [str(v) for v in values]
    return pd.DataFrame(columns)
