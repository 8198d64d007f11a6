"""Exact rational scalars with an explicit floating fallback.

Every real quantity in the package is either a :class:`fractions.Fraction`
(exact mode) or a ``float`` (approximate mode).  Comparisons between two
exact values never consume tolerance; as soon as one side is a float the
comparison is made against a tolerance, and callers are told so.
"""
from __future__ import annotations

import math
import os
from fractions import Fraction
from numbers import Rational
from typing import Union

Scalar = Union[Fraction, float]

DEFAULT_TOL = 1e-9
TOL_ENV = "GEODESY_TOL"


def default_tol() -> float:
    """Module-wide tolerance, overridable through ``GEODESY_TOL``."""
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return DEFAULT_TOL
    return float(raw)


def resolve_tol(tol: float | None) -> float:
    return default_tol() if tol is None else float(tol)


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def all_exact(*xs) -> bool:
    return all(is_exact(x) for x in xs)


def as_scalar(x) -> Scalar:
    """Coerce ints/strings/Fractions to Fraction and leave floats alone."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        return parse_scalar(x, exact=True)
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    return float(x)


def close(a: Scalar, b: Scalar, tol: float) -> tuple[bool, float]:
    """Compare ``a`` and ``b``; returns ``(equal, tolerance_used)``."""
    if is_exact(a) and is_exact(b):
        return a == b, 0.0
    return abs(float(a) - float(b)) <= tol, tol


def leq(a: Scalar, b: Scalar, tol: float) -> tuple[bool, float]:
    """``a <= b`` exactly, or ``a <= b + tol`` when either side is a float."""
    if is_exact(a) and is_exact(b):
        return a <= b, 0.0
    return float(a) <= float(b) + tol, tol


def is_zero(x: Scalar, tol: float) -> bool:
    if is_exact(x):
        return x == 0
    return abs(x) <= tol


def exact_sqrt(x: Scalar) -> Scalar:
    """Square root that stays exact for squares of rationals."""
    if is_exact(x):
        x = Fraction(x)
        if x < 0:
            raise ValueError("square root of a negative number")
        num, den = x.numerator, x.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(rn, rd)
        return math.sqrt(float(x))
    return math.sqrt(x)


def parse_scalar(text, exact: bool = True) -> Scalar:
    """Parse ``"p/q"``, decimal strings and JSON numbers.

    In exact mode decimal strings are read as exact rationals
    (``"0.8"`` becomes ``4/5``); in approximate mode they become floats.
    """
    if isinstance(text, bool):
        raise ValueError(f"not a scalar: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text) if exact else float(text)
    if isinstance(text, float):
        return Fraction(str(text)) if exact else text
    if not isinstance(text, str):
        raise ValueError(f"not a scalar: {text!r}")
    s = text.strip()
    if s.lower() in {"inf", "infinity", "+inf"}:
        return math.inf
    try:
        if exact or "/" in s:
            value = Fraction(s)
            return value if exact else float(value)
        return float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a scalar: {text!r}") from exc


def format_scalar(x: Scalar) -> str:
    """JSON form: ``"p/q"`` for rationals, ``repr`` decimal for floats."""
    if is_exact(x):
        x = Fraction(x)
        return f"{x.numerator}/{x.denominator}"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def format_decimal(x: Scalar) -> str:
    """CSV form: 15 significant digits."""
    return format(float(x), ".15g")
