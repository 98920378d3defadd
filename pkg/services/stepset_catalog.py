import itertools
import logging
import re
from functools import lru_cache

from errors import StepSetError
from models import COUNTING, CensusEntry, ModelClass, WeightedStepSet
from utils import parse_rational

log = logging.getLogger(__name__)

# lexicographic tuple order is the fixed step ordering
ALL_STEPS = tuple(sorted((i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)))

COMPASS = {
    "N": (0, 1),
    "S": (0, -1),
    "E": (1, 0),
    "W": (-1, 0),
    "NE": (1, 1),
    "NW": (-1, 1),
    "SE": (1, -1),
    "SW": (-1, -1),
}
NAMES = {v: k for k, v in COMPASS.items()}

_TOKEN = re.compile(
    r"(?:\((?P<i>[+-]?\d+),(?P<j>[+-]?\d+)\)|(?P<name>NE|NW|SE|SW|N|S|E|W))"
    r"(?::(?P<w>[0-9./+-]+))?"
)


def parse_stepset(spec):
    text = re.sub(r"\s+", "", spec or "")
    if not text:
        raise StepSetError("empty step-set specification")

    found = {}
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise StepSetError(f"malformed token at position {pos}: {text[pos:pos + 12]!r}")
        if m.group("name"):
            step = COMPASS[m.group("name")]
        else:
            step = (int(m.group("i")), int(m.group("j")))
        if step not in ALL_STEPS:
            raise StepSetError(f"step {step} outside the small-step alphabet")
        if step in found:
            raise StepSetError(f"duplicate step {step}")
        found[step] = parse_rational(m.group("w")) if m.group("w") else None

        pos = m.end()
        if pos < len(text):
            if text[pos] != ",":
                raise StepSetError(f"expected ',' at position {pos}")
            pos += 1
            if pos == len(text):
                raise StepSetError("trailing comma")

    weighted = [w is not None for w in found.values()]
    if not any(weighted):
        return WeightedStepSet.counting(found)
    if not all(weighted):
        raise StepSetError("either every step carries a weight or none does")
    if sum(found.values()) != 1:
        raise StepSetError(f"weights sum to {sum(found.values())}, not 1")
    if any(w < 0 for w in found.values()):
        raise StepSetError("negative weight")
    return WeightedStepSet.probabilistic(found)


def format_stepset(ws):
    tokens = []
    for (i, j), w in zip(ws.steps, ws.weights):
        token = f"({i},{j})"
        if ws.mode != COUNTING:
            token += f":{w.numerator}/{w.denominator}" if w.denominator != 1 else f":{w.numerator}"
        tokens.append(token)
    return ",".join(tokens)


def reflect(ws):
    flipped = sorted(((j, i), w) for (i, j), w in zip(ws.steps, ws.weights))
    return ws.model_copy(update={
        "steps": tuple(s for s, _ in flipped),
        "weights": tuple(w for _, w in flipped),
    })


def _order_key(ws):
    return (ws.steps, ws.weights)


def canonicalize(ws):
    return min(ws, reflect(ws), key=_order_key)


def is_symmetric(ws):
    return reflect(ws) == ws


def is_census_candidate(steps):
    steps = set(steps)
    if not any(i == -1 for i, _ in steps) or not any(j == -1 for _, j in steps):
        return False
    # walks confined to a line or a half-plane
    if not any(i == 1 for i, _ in steps) or not any(j == 1 for _, j in steps):
        return False
    # every step leaves the quadrant from the origin
    if not any(i >= 0 and j >= 0 for i, j in steps):
        return False
    if all(i >= j for i, j in steps) or all(j >= i for i, j in steps):
        return False
    return True


@lru_cache(maxsize=1)
def _census():
    reps = set()
    for size in range(1, len(ALL_STEPS) + 1):
        for steps in itertools.combinations(ALL_STEPS, size):
            if is_census_candidate(steps):
                reps.add(canonicalize(WeightedStepSet.counting(steps)))

    ordered = sorted(reps, key=lambda ws: (ws.size, ws.steps))
    out = []
    for n, ws in enumerate(ordered, start=1):
        twin = reflect(ws)
        out.append(ModelClass(
            id=n,
            representative=ws,
            symmetric_twin=None if twin == ws else twin,
        ))
    log.info(f"census built with {len(out)} classes")
    return tuple(out)


def enumerate_models():
    return list(_census())


def model_by_id(model_id):
    models = _census()
    if not 1 <= model_id <= len(models):
        raise StepSetError(f"no census model with id {model_id}")
    return models[model_id - 1]


def census_entry(model):
    ws = model.representative
    return CensusEntry(id=model.id, steps=format_stepset(ws), symmetric=is_symmetric(ws), flags=list(model.flags))


def find_model(ws):
    key = canonicalize(WeightedStepSet.counting(ws.steps))
    for model in _census():
        if model.representative == key:
            return model
    return None


def hull_contains_origin(ws):
    """True when the origin is interior to the convex hull of the steps."""
    steps = ws.steps
    for si, sj in steps:
        normal = (-sj, si)
        dots = [normal[0] * i + normal[1] * j for i, j in steps]
        if all(d >= 0 for d in dots) or all(d <= 0 for d in dots):
            return False
    return True
