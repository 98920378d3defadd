import json
import zlib
from decimal import Decimal, InvalidOperation
from fractions import Fraction

import numpy as np

from errors import ValidationError


def parse_rational(text):
    text = str(text).strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num.strip()), int(den.strip()))
        return Fraction(Decimal(text))
    except (ValueError, ZeroDivisionError, InvalidOperation):
        raise ValidationError(f"not a rational number: {text!r}")


def as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return parse_rational(value)


def number_to_str(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, complex):
        return {"re": repr(value.real), "im": repr(value.imag)}
    return value


def jsonable(obj):
    """Recursively render numbers as lossless strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    return number_to_str(obj)


def dumps(payload):
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def write_text(text, path=None):
    if path is None:
        print(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def stream_seed(seed, name):
    # deterministic child seed for a named stream
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode("utf-8")),))


def named_rng(seed, name):
    return np.random.default_rng(stream_seed(seed, name))


def split_rngs(seed, name, count):
    return [np.random.default_rng(s) for s in stream_seed(seed, name).spawn(count)]
