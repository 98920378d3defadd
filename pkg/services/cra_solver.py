"""Mean collision resolution interval of the binary-splitting stack protocol.

psi(z) = exp(-z) alpha(z) solves
    psi(z) - psi(l + p z) - psi(l + q z) = 1 - 2 psi(l) exp(-z) (1 + K z)
through sums over the semigroup H generated by s1(z) = l + p z and
s2(z) = l + q z. A word is kept as its affine map z -> offset + scale * z.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np
import pandas as pd
from numpy.polynomial import chebyshev
from scipy import optimize

from config import (
    FQW_CRA_NODES,
    FQW_CRA_SERIES_ORDER,
    FQW_CRA_WORD_TOL,
    FQW_CRI_SLOT_CAP,
    FQW_SEED,
    FQW_THREADS,
)
from errors import NumericError, TruncationError, ValidationError
from models import AffineWord, CraConstants, CraResult, CtmcEstimate, TruncatedSeries
from utils import split_rngs

log = logging.getLogger(__name__)

MAX_STATES = 2_000_000
CHUNK = 1000
SCAN_STEP = 0.05


def _check_p(p):
    if not 0 < p < 1:
        raise ValidationError(f"p = {p} outside (0, 1)")


# ===== SEMIGROUP =====

def compose_sigma(w, i, lam, p):
    """Left composition s_i o w: (scale, offset) -> (p_i scale, lam + p_i offset)."""
    if i not in (1, 2):
        raise ValidationError("generator index must be 1 or 2")
    pi = p if i == 1 else 1 - p
    return AffineWord(
        scale=pi * w.scale,
        offset=lam + pi * w.offset,
        length=w.length + 1,
        ones_count=w.ones_count + (i == 1),
    )


def identity_word(exact=False):
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return AffineWord(scale=one, offset=zero, length=0, ones_count=0)


def enumerate_words(lam, p, max_length, order="bfs"):
    """Every word up to max_length, one AffineWord each (exponential, small lengths only)."""
    if order not in ("bfs", "dfs"):
        raise ValidationError(f"unknown traversal {order!r}")
    exact = isinstance(lam, Fraction) and isinstance(p, Fraction)
    root = identity_word(exact)
    out = []
    if order == "bfs":
        level = [root]
        while level:
            out.extend(level)
            if level[0].length == max_length:
                break
            level = [compose_sigma(w, i, lam, p) for w in level for i in (1, 2)]
        return out

    stack = [root]
    while stack:
        w = stack.pop()
        out.append(w)
        if w.length < max_length:
            stack.extend(compose_sigma(w, i, lam, p) for i in (2, 1))
    return out


def level_sums(lam, p, max_length, m):
    """Sum over words of length l of (p^m; q^m)^sigma, for l = 0..max_length."""
    sums = [0] * (max_length + 1)
    for w in enumerate_words(lam, p, max_length):
        sums[w.length] += w.scale**m
    return sums


def word_length_for(p, tol=FQW_CRA_WORD_TOL):
    rate = p * p + (1 - p) ** 2
    return max(1, math.ceil(math.log(tol) / math.log(rate)))


def level_states(lam, p, max_length, prune=0.0):
    """Merged BFS: per level a dict (offset, scale) -> multiplicity, plus the pruned mass."""
    q = 1 - p
    level = {(0.0, 1.0): 1.0}
    levels = [level]
    dropped = 0.0
    for _ in range(max_length):
        nxt = {}
        for (o, s), mult in level.items():
            for pi in (p, q):
                key = (lam + pi * o, pi * s)
                if prune and mult * key[1] ** 2 < prune:
                    dropped += mult * key[1] ** 2
                    continue
                nxt[key] = nxt.get(key, 0.0) + mult
        if len(nxt) > MAX_STATES:
            raise TruncationError(f"word expansion exceeds {MAX_STATES} states at length {len(levels)}")
        if not nxt:
            break
        levels.append(nxt)
        level = nxt
    return levels, dropped


def _sums_bfs(lam, p, max_order, max_length, prune):
    levels, dropped = level_states(lam, p, max_length, prune)
    g = np.zeros(max_order + 1)
    k = np.zeros(max_order + 1)
    ms = np.arange(max_order + 1)
    for level in levels:
        for (o, s), mult in level.items():
            w = mult * math.exp(-o) * s ** ms
            g += w
            k += o * w
    return g, k, dropped


def _sums_dfs(lam, p, max_order, max_length):
    """Right-composition recursion F(o, s) = h(o) s^m + F(o + s l, s p) + F(o + s l, s q)."""
    q = 1 - p
    ms = np.arange(max_order + 1)

    def visit(o, s, depth):
        w = math.exp(-o) * s ** ms
        g, k = w.copy(), o * w
        if depth == max_length:
            return g, k
        child = o + s * lam
        if p == q:
            cg, ck = visit(child, s * p, depth + 1)
            return g + 2 * cg, k + 2 * ck
        for pi in (p, q):
            cg, ck = visit(child, s * pi, depth + 1)
            g, k = g + cg, k + ck
        return g, k

    if p != q and 2 ** max_length > MAX_STATES:
        raise TruncationError(f"depth-first expansion to length {max_length} exceeds {MAX_STATES} words")
    g, k = visit(0.0, 1.0, 0)
    return g, k, 0.0


# ===== TRANSFER OPERATOR =====

def _sums_transfer(lam, p, max_order, nodes):
    """Solve Phi = h + p^m Phi(l + p z) + q^m Phi(l + q z) on [0, l / min(p, q)]."""
    q = 1 - p
    right = lam / min(p, q)
    t = np.cos(np.pi * np.arange(nodes) / (nodes - 1))[::-1]
    z = 0.5 * right * (t + 1.0)

    def to_t(u):
        return 2.0 * u / right - 1.0

    inv = np.linalg.inv(chebyshev.chebvander(t, nodes - 1))
    e1 = chebyshev.chebvander(to_t(lam + p * z), nodes - 1) @ inv
    e2 = chebyshev.chebvander(to_t(lam + q * z), nodes - 1) @ inv
    rhs = np.column_stack([np.exp(-z), z * np.exp(-z)])
    eye = np.eye(nodes)

    g = np.zeros(max_order + 1)
    k = np.zeros(max_order + 1)
    for m in range(2, max_order + 1):
        phi = np.linalg.solve(eye - p**m * e1 - q**m * e2, rhs)
        # node 0 is z = 0
        g[m], k[m] = phi[0, 0], phi[0, 1]
    return g, k


# ===== CONSTANTS =====

def printed_constant(lam, p):
    """The closed form (e^{-lp} - e^{-lq}) / ((l/q) e^{-lq} - (l/p) e^{-lp}); 0 when p = q."""
    q = 1 - p
    num = math.exp(-lam * p) - math.exp(-lam * q)
    if p == q or lam == 0:
        return 0.0
    return num / ((lam / q) * math.exp(-lam * q) - (lam / p) * math.exp(-lam * p))


def _tail_bound(lam, p, K, max_order):
    q = 1 - p
    spread = 1.0 + abs(K) * (lam / min(p, q))
    total = 0.0
    for m in range(max_order + 1, max_order + 60):
        total += (spread + m * abs(K)) * math.exp(m * math.log(lam) - math.lgamma(m + 1)) if lam > 0 else 0.0
    return total / (1.0 - p * p - q * q)


def cra_constants(
    lam,
    p,
    max_length=None,
    max_order=FQW_CRA_SERIES_ORDER,
    method="transfer",
    order="bfs",
    nodes=FQW_CRA_NODES,
    prune=0.0,
):
    _check_p(p)
    if lam < 0:
        raise ValidationError("lambda must be nonnegative")
    if not 2 <= max_order <= 60:
        raise ValidationError("series order must lie in [2, 60]")
    if method not in ("transfer", "words"):
        raise ValidationError(f"unknown method {method!r}")
    q = 1 - p
    max_length = max_length or word_length_for(p)
    dropped = 0.0

    if lam == 0:
        # every word maps 0 to 0
        ms = np.arange(max_order + 1)
        with np.errstate(divide="ignore"):
            g = np.where(ms >= 2, 1.0 / (1.0 - p**ms - q**ms), 0.0)
        k = np.zeros(max_order + 1)
    elif method == "transfer":
        g, k = _sums_transfer(lam, p, max_order, nodes)
    elif order == "bfs":
        g, k, dropped = _sums_bfs(lam, p, max_order, max_length, prune)
    else:
        g, k, dropped = _sums_dfs(lam, p, max_order, max_length)

    signs = (-1.0) ** np.arange(max_order + 1)
    g, k = signs * g, signs * k
    g[:2] = 0.0
    k[:2] = 0.0

    # K fixed by alpha_1 = 1: S'(l) = 1 - K
    a1 = sum(g[m] * lam ** (m - 1) / math.factorial(m - 1) for m in range(2, max_order + 1))
    b1 = sum((k[m] - m * g[m]) * lam ** (m - 1) / math.factorial(m - 1) for m in range(2, max_order + 1))
    if 1 + b1 == 0:
        raise NumericError(f"K undefined at lambda = {lam}")
    K = (1 - a1) / (1 + b1)

    D = sum(((1 - K * m) * g[m] + K * k[m]) * lam**m / math.factorial(m) for m in range(2, max_order + 1))
    tail = _tail_bound(lam, p, K, max_order)
    if method == "words":
        rate = p * p + q * q
        word_tail = rate ** (max_length + 1) / (1 - rate) + dropped / (1 - rate)
        tail += word_tail * sum((1 + m * abs(K) + abs(K) * lam / min(p, q)) * lam**m / math.factorial(m) for m in range(2, max_order + 1))

    return CraConstants(
        lam=lam,
        p=p,
        q=q,
        K=K,
        g=g.tolist(),
        k=k.tolist(),
        D=D,
        truncation=(max_length, max_order),
        method=method,
        printed_k=printed_constant(lam, p),
        tail_bound=tail,
    )


def stability_margin(lam, p, max_order=FQW_CRA_SERIES_ORDER, nodes=FQW_CRA_NODES):
    """1 + 2 D(lambda)."""
    return 1.0 + 2.0 * cra_constants(lam, p, max_order=max_order, nodes=nodes).D


# ===== PSI AND ALPHA =====

def psi_series(c):
    if 1 + 2 * c.D <= 0:
        raise ValidationError(f"lambda = {c.lam} is not below lambda_max (1 + 2D = {1 + 2 * c.D:.3g})")
    scale = 1.0 / (1.0 + 2.0 * c.D)
    coeffs = [1.0, 0.0]
    for m in range(2, len(c.g)):
        coeffs.append(-2.0 * scale * ((1 - m * c.K) * c.g[m] + c.K * c.k[m]) / math.factorial(m))
    return TruncatedSeries(name="psi", coefficients=coeffs)


def psi_value(s, zv):
    return math.fsum(cf * zv**m for m, cf in enumerate(s.coefficients))


def fe_residual(c, zv):
    s = psi_series(c)
    lhs = psi_value(s, zv) - psi_value(s, c.lam + c.p * zv) - psi_value(s, c.lam + c.q * zv)
    rhs = 1.0 - 2.0 * psi_value(s, c.lam) * math.exp(-zv) * (1.0 + c.K * zv)
    return abs(lhs - rhs)


def _alpha_from_series(n, s):
    return math.fsum(s.coefficients[m] * math.perm(n, m) for m in range(n + 1))


def alpha_closed_form(ns, c, prune=1e-30):
    """alpha_n for each n from the word sums, valid for any n."""
    ns = np.asarray(list(ns), dtype=float)
    if 1 + 2 * c.D <= 0:
        raise ValidationError(f"lambda = {c.lam} is not below lambda_max")
    scale = 1.0 / (1.0 + 2.0 * c.D)
    length = word_length_for(c.p, 1e-17 / max(1.0, float(ns.max()) ** 2))
    levels, _ = level_states(c.lam, c.p, length, prune)
    total = np.zeros_like(ns)
    for level in levels:
        for (o, s), mult in level.items():
            if s == 1.0:
                pow_n = np.where(ns == 0, 1.0, 0.0)
                pow_n1 = np.where(ns == 1, 1.0, 0.0)
                first = pow_n - 1.0 + ns
            else:
                log1m = math.log1p(-s)
                first = np.expm1(ns * log1m) + ns * s
                pow_n1 = np.exp((ns - 1) * log1m)
            total += mult * math.exp(-o) * ((1 + c.K * o) * first + c.K * ns * s * (pow_n1 - 1.0))
    return 1.0 - 2.0 * scale * total


def mean_cri(n, c):
    if n < 0:
        raise ValidationError("n must be nonnegative")
    if n <= 1:
        return 1.0
    order = len(c.g) - 1
    if n <= order:
        return _alpha_from_series(n, psi_series(c))
    return float(alpha_closed_form([n], c)[0])


# ===== THRESHOLD =====

def lambda_max(p, tol=1e-6, max_order=FQW_CRA_SERIES_ORDER, nodes=FQW_CRA_NODES):
    """First positive root of 1 + 2D(lambda), refined until the truncation no longer moves it."""
    _check_p(p)

    def root(order, n_nodes, near=None):
        def margin(lam):
            return stability_margin(lam, p, order, n_nodes)

        if near is not None:
            lo, hi = near - SCAN_STEP / 2, near + SCAN_STEP / 2
            if margin(lo) > 0 >= margin(hi):
                return optimize.brentq(margin, lo, hi, xtol=tol / 10)
        lo, f_lo = SCAN_STEP, margin(SCAN_STEP)
        while lo < 1.0:
            hi = lo + SCAN_STEP
            f_hi = margin(hi)
            if f_lo > 0 and f_hi <= 0:
                return optimize.brentq(margin, lo, hi, xtol=tol / 10)
            lo, f_lo = hi, f_hi
        raise NumericError(f"no sign change of 1 + 2D(lambda) below lambda = 1 for p = {p}")

    current = root(max_order, nodes)
    for _ in range(2):
        max_order, nodes = min(60, max_order + 10), nodes + 16
        refined = root(max_order, nodes, current)
        if abs(refined - current) < tol:
            return refined
        current = refined
    log.warning(f"lambda_max({p}) still moving after refinement")
    return current


# ===== OSCILLATIONS =====

def chi_roots(p, eta=0.01, k_max=5):
    _check_p(p)
    p, q = min(p, 1 - p), max(p, 1 - p)
    lp, lq = math.log(p), math.log(q)

    def f(chi):
        return 1 - np.exp(-chi * lp) - np.exp(-chi * lq)

    def df(chi):
        return lp * np.exp(-chi * lp) + lq * np.exp(-chi * lq)

    roots = []
    for kk in range(1, k_max + 1):
        seed = complex(-1.0, 2 * math.pi * kk / math.log(1 / q))
        try:
            chi = complex(optimize.newton(f, seed, fprime=df, tol=1e-14, maxiter=100))
        except RuntimeError as e:
            log.warning(f"chi root seed k={kk} did not converge: {e}")
            continue
        if -1 - 1e-9 <= chi.real < -1 + eta and abs(chi + 1) > 1e-6:
            roots.append(chi)
    return roots


def _joint_fit(u, ns, ratio, omega):
    design = np.column_stack([np.ones_like(ns), 1.0 / ns, 1.0 / ns**2, np.cos(omega * u), np.sin(omega * u)])
    coef, *_ = np.linalg.lstsq(design, ratio, rcond=None)
    return coef


def slope_and_fluctuation(lam, p, n_range, c=None, threshold=5.0):
    """Linear slope of alpha_n and the log-periodic spectrum of the detrended alpha_n / n."""
    ns = np.array(list(n_range), dtype=float)
    if len(ns) < 16:
        raise ValidationError("n range too short for a slope and spectrum")
    c = c or cra_constants(lam, p)
    alpha = alpha_closed_form(ns, c)

    slope = float(np.polyfit(ns, alpha, 1)[0])
    half = len(ns) // 2
    halves = [float(np.polyfit(ns[:half], alpha[:half], 1)[0]), float(np.polyfit(ns[half:], alpha[half:], 1)[0])]

    u = np.log(ns)
    ratio = alpha / ns
    roots = chi_roots(p)
    if roots:
        base = min(abs(chi.imag) for chi in roots)
    else:
        base = 2 * math.pi / math.log(1 / max(p, 1 - p))

    def power(omega):
        coef = _joint_fit(u, ns, ratio, omega)
        return float(coef[3] ** 2 + coef[4] ** 2)

    grid = np.linspace(0.5 * base, 4.0 * base, 141)
    harmonics = [kk * base for kk in (1, 2, 3)]
    background = [power(w) for w in grid if all(abs(w - h) > 0.15 * h for h in harmonics)]
    floor = float(np.median(background))
    spectrum = [
        {"omega": float(w), "power": power(w), "ratio": power(w) / floor if floor > 0 else math.inf}
        for w in harmonics
    ]
    return {
        "slope": slope,
        "slope_halves": halves,
        "background": floor,
        "spectrum": spectrum,
        "oscillating": spectrum[0]["ratio"] > threshold,
    }


# ===== MONTE CARLO =====

def _episode(n, lam, p, rng, cap):
    stack = [n]
    slots = 0
    while stack:
        slots += 1
        if slots > cap:
            return None
        top = stack[-1]
        arrivals = int(rng.poisson(lam)) if lam > 0 else 0
        if top >= 2:
            stay = int(rng.binomial(top, p))
            stack[-1] = top - stay
            stack.append(stay + arrivals)
        else:
            stack.pop()
            if stack:
                stack[-1] += arrivals
    return slots


def _chunk(args):
    n, lam, p, rng, size, cap = args
    total = total_sq = 0.0
    done = runaways = 0
    for _ in range(size):
        slots = _episode(n, lam, p, rng, cap)
        if slots is None:
            runaways += 1
            continue
        total += slots
        total_sq += slots * slots
        done += 1
    return total, total_sq, done, runaways


def simulate_cri(n, lam, p, replicas, seed=FQW_SEED, cap=FQW_CRI_SLOT_CAP):
    _check_p(p)
    if n < 0 or replicas < 1 or lam < 0:
        raise ValidationError("n, lambda must be nonnegative and replicas positive")
    if n <= 1:
        return CtmcEstimate(
            value=1.0, std_error=0.0, replicas=replicas, seed=seed, functional="cri", flags=["deterministic"]
        )

    chunks = math.ceil(replicas / CHUNK)
    rngs = split_rngs(seed, f"cri:{n}", chunks)
    sizes = [min(CHUNK, replicas - i * CHUNK) for i in range(chunks)]
    jobs = [(n, lam, p, rng, size, cap) for rng, size in zip(rngs, sizes)]
    if FQW_THREADS > 1 and chunks > 1:
        with ProcessPoolExecutor(max_workers=FQW_THREADS) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(job) for job in jobs]

    total = sum(part[0] for part in parts)
    total_sq = sum(part[1] for part in parts)
    done = sum(part[2] for part in parts)
    runaways = sum(part[3] for part in parts)
    if done == 0:
        raise NumericError(f"all {replicas} episodes exceeded the slot cap {cap}")

    mean = total / done
    var = (total_sq - done * mean * mean) / (done - 1) if done > 1 else 0.0
    flags = ["runaways"] if runaways else []
    if runaways:
        log.error(f"simulate_cri n={n}: {runaways} episodes hit the slot cap")
    return CtmcEstimate(
        value=mean,
        std_error=math.sqrt(max(var, 0.0) / done),
        replicas=done,
        seed=seed,
        functional="cri",
        runaways=runaways,
        flags=flags,
    )


# ===== REPORTS =====

def cra_table(lam, p, n_max=8, replicas=0, seed=FQW_SEED, c=None):
    c = c or cra_constants(lam, p)
    rows = []
    for n in range(n_max + 1):
        row = {"n": n, "alpha_n": mean_cri(n, c), "simulated_mean": None, "std_err": None}
        if replicas:
            est = simulate_cri(n, lam, p, replicas, seed)
            row["simulated_mean"], row["std_err"] = est.value, est.std_error
        rows.append(row)
    return pd.DataFrame(rows, columns=["n", "alpha_n", "simulated_mean", "std_err"])


def cra_report(lam, p, n_max=8, seed=FQW_SEED, k_max=3, slope_range=None):
    lmax = lambda_max(p)
    if lam >= lmax:
        raise ValidationError(f"lambda = {lam} is not below lambda_max = {lmax:.6f}")
    c = cra_constants(lam, p)
    alpha = [mean_cri(n, c) for n in range(n_max + 1)]
    slope = None
    if slope_range is not None:
        slope = slope_and_fluctuation(lam, p, slope_range, c)["slope"]
    chi = [{"re": r.real, "im": r.imag} for r in chi_roots(p, k_max=k_max)]
    return CraResult(lam=lam, p=p, seed=seed, lambda_max=lmax, K=c.K, D=c.D, alpha=alpha, slope=slope, chi=chi)
