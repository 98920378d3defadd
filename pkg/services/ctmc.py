"""Uniformized simulation of the two-queue models.

Each model is a jump chain run at a constant rate bound; self-loops fill
the gap between the state's outflow and the bound, so averaging a
functional over uniformized steps is the time average of the CTMC.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from config import FQW_CTMC_WARMUP, FQW_SEED, FQW_THREADS
from errors import ValidationError
from models import AlternatingParams, CoupledProcessorsParams, CtmcEstimate, JsqParams, StabilityReport
from services.queueing_analysis import require_ergodic
from utils import named_rng, split_rngs

log = logging.getLogger(__name__)

BLOCK = 65536

FUNCTIONALS = (
    "p_empty",
    "p_q1_empty",
    "mean_total",
    "p_q1_longer",
    "p_q2_longer",
    "pgf_q2_on_q1_empty",
)


# ===== MODELS =====

class CoupledChain:
    def __init__(self, p):
        self.l1, self.l2 = float(p.lambda1), float(p.lambda2)
        self.m1, self.m2 = float(p.mu1), float(p.mu2)
        self.m1s, self.m2s = float(p.mu1_star), float(p.mu2_star)
        self.rate = self.l1 + self.l2 + max(self.m1, self.m1s) + max(self.m2, self.m2s)

    def start(self):
        return (0, 0, 0)

    def step(self, state, u):
        n1, n2, s = state
        if u < self.l1:
            return (n1 + 1, n2, s)
        u -= self.l1
        if u < self.l2:
            return (n1, n2 + 1, s)
        u -= self.l2
        s1 = self.m1 if n2 > 0 else self.m1s
        if n1 > 0 and u < s1:
            return (n1 - 1, n2, s)
        u -= max(self.m1, self.m1s)
        s2 = self.m2 if n1 > 0 else self.m2s
        if n2 > 0 and 0 <= u < s2:
            return (n1, n2 - 1, s)
        return state


class JsqChain:
    def __init__(self, p):
        self.lam, self.alpha, self.beta = float(p.lam), float(p.alpha), float(p.beta)
        self.pi1 = float(p.pi1)
        self.rate = self.lam + self.alpha + self.beta

    def start(self):
        return (0, 0, 0)

    def step(self, state, u):
        n1, n2, s = state
        if u < self.lam:
            if n1 < n2 or (n1 == n2 and u < self.lam * self.pi1):
                return (n1 + 1, n2, s)
            return (n1, n2 + 1, s)
        u -= self.lam
        if u < self.alpha:
            return (n1 - 1, n2, s) if n1 > 0 else state
        u -= self.alpha
        if n2 > 0:
            return (n1, n2 - 1, s)
        return state


class AlternatingChain:
    """State (n1, n2, server) with server 1 or 2; timers run while serving."""

    def __init__(self, p):
        self.l1, self.l2 = float(p.lambda1), float(p.lambda2)
        self.mu = (float(p.mu1), float(p.mu2))
        self.xi = (float(p.xi1), float(p.xi2))
        self.rate = self.l1 + self.l2 + max(self.mu) + max(self.xi)

    def start(self):
        return (0, 0, 1)

    def step(self, state, u):
        n1, n2, s = state
        if u < self.l1:
            return (n1 + 1, n2, 1 if n1 == 0 and n2 == 0 else s)
        u -= self.l1
        if u < self.l2:
            return (n1, n2 + 1, 2 if n1 == 0 and n2 == 0 else s)
        u -= self.l2
        if s == 1:
            if n1 == 0:
                return state
            if u < self.mu[0]:
                return (n1 - 1, n2, 2 if n1 == 1 and n2 > 0 else 1)
            u -= max(self.mu)
            if u < self.xi[0] and n2 > 0:
                return (n1, n2, 2)
            return state
        if n2 == 0:
            return state
        if u < self.mu[1]:
            return (n1, n2 - 1, 1 if n2 == 1 and n1 > 0 else 2)
        u -= max(self.mu)
        if u < self.xi[1] and n1 > 0:
            return (n1, n2, 1)
        return state


CHAINS = {
    "coupled": CoupledChain,
    "jsq": JsqChain,
    "alternating": AlternatingChain,
}


def chain_for(params):
    if not isinstance(params, (CoupledProcessorsParams, JsqParams, AlternatingParams)):
        raise ValidationError(f"unsupported model {type(params).__name__}")
    return CHAINS[params.model](params)


# ===== FUNCTIONALS =====

def functional_for(name, params, zv=None):
    if name not in FUNCTIONALS:
        raise ValidationError(f"functional {name!r} not supported")
    if name == "p_empty":
        return lambda n1, n2: 1.0 if n1 == 0 and n2 == 0 else 0.0
    if name == "p_q1_empty":
        return lambda n1, n2: 1.0 if n1 == 0 else 0.0
    if name == "mean_total":
        return lambda n1, n2: float(n1 + n2)
    if name == "p_q1_longer":
        return lambda n1, n2: 1.0 if n1 > n2 else 0.0
    if name == "p_q2_longer":
        return lambda n1, n2: 1.0 if n2 > n1 else 0.0

    # F(0, r z) - F(0, 0) with r = sqrt(mu2 / lambda2)
    if not isinstance(params, CoupledProcessorsParams) or params.lambda2 == 0:
        raise ValidationError("pgf_q2_on_q1_empty needs the coupled model with lambda2 > 0")
    if zv is None or not 0 <= zv < 1:
        raise ValidationError("pgf_q2_on_q1_empty needs z in [0, 1)")
    w = math.sqrt(float(params.mu2 / params.lambda2)) * zv
    return lambda n1, n2: w**n2 if n1 == 0 and n2 > 0 else 0.0


# ===== RUNS =====

def _run(chain, rng, steps, warmup, observe):
    state = chain.start()
    total = 0.0
    done = 0
    while done < steps:
        block = rng.random(min(BLOCK, steps - done)) * chain.rate
        for u in block.tolist():
            if done >= warmup:
                total += observe(state[0], state[1])
            state = chain.step(state, u)
            done += 1
    return total / max(1, steps - warmup)


def _replica(args):
    params, rng, horizon, functional, zv = args
    chain = chain_for(params)
    steps = max(1, int(round(chain.rate * horizon)))
    warmup = int(FQW_CTMC_WARMUP * steps)
    return _run(chain, rng, steps, warmup, functional_for(functional, params, zv))


def simulate_ctmc(params, horizon, replicas, seed=FQW_SEED, functional="p_empty", zv=None):
    if horizon <= 0 or replicas < 1:
        raise ValidationError("horizon and replicas must be positive")
    functional_for(functional, params, zv)
    require_ergodic(params)

    rngs = split_rngs(seed, f"ctmc:{params.model}", replicas)
    jobs = [(params, rng, horizon, functional, zv) for rng in rngs]
    if FQW_THREADS > 1 and replicas > 1:
        with ProcessPoolExecutor(max_workers=FQW_THREADS) as pool:
            values = list(pool.map(_replica, jobs))
    else:
        values = [_replica(job) for job in jobs]

    values = np.array(values, dtype=float)
    flags = []
    if replicas > 1:
        std_error = float(values.std(ddof=1) / math.sqrt(replicas))
    else:
        std_error = 0.0
        flags.append("single_replica")
    log.info(f"ctmc {params.model}/{functional}: {values.mean():.6f} +- {std_error:.2g}")
    return CtmcEstimate(
        value=float(values.mean()),
        std_error=std_error,
        replicas=replicas,
        seed=seed,
        functional=functional,
        flags=flags,
    )


def stability_check(params, horizon=2000.0, seed=FQW_SEED):
    """Classify one trajectory as stable or drifting from quarter means of n1 + n2."""
    chain = chain_for(params)
    steps = max(4, int(round(chain.rate * horizon)))
    rng = named_rng(seed, f"stability:{params.model}")
    quarter = steps // 4
    sums = [0.0, 0.0, 0.0, 0.0]
    state = chain.start()
    for k, u in enumerate((rng.random(steps) * chain.rate).tolist()):
        state = chain.step(state, u)
        sums[min(3, k // quarter)] += state[0] + state[1]
    means = [s / quarter for s in sums]
    # a transient chain grows linearly, so the last quarter dominates the second
    stable = means[3] < 1.5 * means[1] + 10.0
    return StabilityReport(model=params.model, stable=stable, quarter_means=means, horizon=horizon, seed=seed)
