"""The group of the walk: involutions xi, eta and the order of delta = eta o xi.

Everything runs on exact rational points. A finite group of order 2n means
delta^n is the identity, so delta^n fixes every valid point; an infinite
group fixes only a proper subvariety, which random rational points avoid.
"""

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import lru_cache

from config import DATA_DIR, FQW_GROUP_CAP, FQW_GROUP_TRIALS, FQW_GROUP_Z_LEVELS, FQW_SEED, FQW_THREADS
from errors import DenominatorError, SamplingError, ValidationError
from models import COUNTING, BirationalPoint, GroupOrderReport
from services.stepset_catalog import canonicalize, parse_stepset
from utils import split_rngs

log = logging.getLogger(__name__)

MAX_RESAMPLES = 3
COORD_RANGE = 50


def _horner(coeffs, v):
    acc = Fraction(0)
    for cf in reversed(coeffs):
        acc = acc * v + cf
    return acc


@lru_cache(maxsize=512)
def _coefficient_polys(ws):
    """(a_bar, c_bar, a_tilde, c_tilde), each as coefficient lists by power 0..2."""
    a_bar, c_bar, a_tilde, c_tilde = ([Fraction(0)] * 3 for _ in range(4))
    for (i, j), w in zip(ws.steps, ws.weights):
        if j == 1:
            a_bar[i + 1] += w
        if j == -1:
            c_bar[i + 1] += w
        if i == 1:
            a_tilde[j + 1] += w
        if i == -1:
            c_tilde[j + 1] += w
    return tuple(tuple(p) for p in (a_bar, c_bar, a_tilde, c_tilde))


def apply_xi(p, ws):
    a_bar, c_bar, _, _ = _coefficient_polys(ws)
    den = _horner(a_bar, p.x) * p.y
    if den == 0:
        raise DenominatorError(f"xi undefined at ({p.x}, {p.y})")
    return BirationalPoint(p.x, _horner(c_bar, p.x) / den)


def apply_eta(p, ws):
    _, _, a_tilde, c_tilde = _coefficient_polys(ws)
    den = _horner(a_tilde, p.y) * p.x
    if den == 0:
        raise DenominatorError(f"eta undefined at ({p.x}, {p.y})")
    return BirationalPoint(_horner(c_tilde, p.y) / den, p.y)


def delta(p, ws):
    return apply_eta(apply_xi(p, ws), ws)


def orbit(p, ws, n):
    points = [p]
    for _ in range(n):
        points.append(delta(points[-1], ws))
    return points


def inventory(p, ws):
    """S(x, y) = sum w x^i y^j, the quantity every group element preserves."""
    return sum((w * p.x**i * p.y**j for (i, j), w in zip(ws.steps, ws.weights)), Fraction(0))


def kernel_value(p, ws, z=None):
    s = inventory(p, ws)
    if ws.mode == COUNTING:
        if z is None:
            raise ValidationError("counting kernel needs z")
        return p.x * p.y * (s - 1 / Fraction(z))
    return p.x * p.y * (1 - s)


def _period(p, ws, cap):
    q = p
    for n in range(1, cap + 1):
        q = delta(q, ws)
        if q == p:
            return n
    return None


def _sample_point(rng):
    def coord():
        return Fraction(int(rng.integers(1, COORD_RANGE + 1)), int(rng.integers(1, COORD_RANGE + 1)))
    return BirationalPoint(coord(), coord())


def _check_samplable(ws):
    a_bar, c_bar, a_tilde, c_tilde = _coefficient_polys(ws)
    for poly, name in ((a_bar, "j=+1"), (c_bar, "j=-1"), (a_tilde, "i=+1"), (c_tilde, "i=-1")):
        if not any(poly):
            raise SamplingError(f"no valid points: step set has no {name} step")


def group_order(ws, cap=FQW_GROUP_CAP, trials=FQW_GROUP_TRIALS, seed=FQW_SEED):
    if cap < 1 or trials < 1:
        raise ValidationError("cap and trials must be positive")
    _check_samplable(ws)

    trials = max(trials, FQW_GROUP_Z_LEVELS) if ws.mode == COUNTING else trials
    rngs = split_rngs(seed, "group_order", trials)
    points, periods, levels = [], [], set()

    for rng in rngs:
        for _ in range(MAX_RESAMPLES * 4):
            p = _sample_point(rng)
            level = inventory(p, ws)
            # counting mode: each point sits on the curve at z = 1/S(p)
            if ws.mode == COUNTING and level in levels and len(levels) < FQW_GROUP_Z_LEVELS:
                continue
            break
        else:
            raise SamplingError("unable to sample points at distinct z levels")
        levels.add(level)
        points.append(p)
        periods.append(_period(p, ws, cap))

    # resample any point that disagrees with a finite majority
    if any(n is not None for n in periods) and any(n is None for n in periods):
        log.info(f"resampling disagreeing group witnesses for {list(ws.steps)}")
        for idx, n in enumerate(periods):
            for _ in range(MAX_RESAMPLES if n is None else 0):
                p = _sample_point(rngs[idx])
                n = _period(p, ws, cap)
                points[idx], periods[idx] = p, n
                if n is not None:
                    break

    order = None
    if all(n is not None for n in periods):
        n = math.lcm(*periods)
        if n <= cap:
            order = 2 * n

    return GroupOrderReport(
        order=order,
        unbounded_beyond=None if order else cap,
        cap=cap,
        trials=trials,
        witness=[(str(p.x), str(p.y)) for p in points],
        z_values=[str(1 / inventory(p, ws)) for p in points] if ws.mode == COUNTING else [],
        seed=seed,
    )


def _order_label(args):
    ws, cap, trials, seed = args
    return group_order(ws, cap, trials, seed).label


def census_group_histogram(models, cap=FQW_GROUP_CAP, seed=FQW_SEED, trials=FQW_GROUP_TRIALS):
    jobs = [(m.representative, cap, trials, seed) for m in models]
    if FQW_THREADS > 1:
        with ProcessPoolExecutor(max_workers=FQW_THREADS) as pool:
            labels = list(pool.map(_order_label, jobs))
    else:
        labels = [_order_label(job) for job in jobs]

    histogram = {}
    for label in labels:
        histogram[label] = histogram.get(label, 0) + 1
    return dict(sorted(histogram.items(), key=lambda kv: (kv[0] == "unbounded", kv[0].zfill(4))))


@lru_cache(maxsize=1)
def algebraic_table():
    path = os.path.join(DATA_DIR, "algebraic_models.json")
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return frozenset(canonicalize(parse_stepset(entry["steps"])) for entry in payload["models"])


def in_algebraic_table(ws):
    return canonicalize(ws) in algebraic_table()


def nature_report(ws, order_report):
    if not order_report.finite:
        return "unclassified"
    if order_report.order == 4:
        return "holonomic_nonalgebraic"
    if in_algebraic_table(ws):
        return "algebraic"
    return "holonomic_nonalgebraic"
