"""Scalar backends.

Two backends are supported: ``"exact"`` (GMP rationals, ``gmpy2.mpq``) and
``"float"`` (IEEE doubles).  A map carries one backend tag and every scalar it
touches is converted through :func:`to_scalar` first; mixing ``mpq`` with
``float`` would silently produce an ``mpfr``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq, to_binary

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

# Float backend: absolute slack allowed on range checks [0, 1].
FLOAT_RANGE_TOL = 1e-12

# Default budget on the denominator size of one exact scalar, in bits.
DEFAULT_BIT_BUDGET = 2**20

_MPQ = type(mpq())


def check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    return backend


def parse_number(text: str, backend: str):
    """Parse a decimal or ``p/q`` literal into a backend scalar."""
    text = text.strip()
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc
    if backend == EXACT:
        return mpq(value.numerator, value.denominator)
    if "/" in text:
        return value.numerator / value.denominator
    return float(text)


def to_scalar(value, backend: str):
    """Convert ``value`` into the scalar type of ``backend``."""
    if isinstance(value, str):
        return parse_number(value, backend)
    if backend == EXACT:
        if isinstance(value, float):
            # a float literal stands for its shortest decimal form: 0.01 -> 1/100
            if not math.isfinite(value):
                raise ValueError(f"non-finite value {value!r}")
            return parse_number(repr(value), EXACT)
        if isinstance(value, Rational) and not isinstance(value, bool):
            return mpq(value.numerator, value.denominator)
        return mpq(value)
    return float(value)


def format_scalar(value) -> str:
    """Text form: ``p/q`` for rationals, shortest round-trip repr for floats."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def hash_key(value):
    """Set/dict key for a scalar.

    Orbit values such as ``1/4 - 2**-k/8`` have hashes that repeat with a
    short period (2 has small order modulo the hash prime), so hashed
    containers of mpq degrade to linear scans.  The canonical byte encoding
    hashes uniformly.
    """
    return to_binary(value) if isinstance(value, _MPQ) else value


def denominator_bits(value) -> int:
    if isinstance(value, float):
        return 0
    return int(value.denominator.bit_length())
