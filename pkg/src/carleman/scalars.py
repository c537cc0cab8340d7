"""Scalar number tower: exact rationals or complex doubles.

A whole pipeline run works in a single mode. Exact mode uses
fractions.Fraction (arbitrary precision, always reduced, real only);
Float mode uses the builtin complex. Both support +, -, *, /, ** with
integer exponents, which is all the algebra below ever needs.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import Union

from .errors import CarlemanError

Scalar = Union[Fraction, complex]


class Mode(Enum):
    EXACT = "exact"
    FLOAT = "float"

    @property
    def zero(self) -> Scalar:
        return Fraction(0) if self is Mode.EXACT else complex(0)

    @property
    def one(self) -> Scalar:
        return Fraction(1) if self is Mode.EXACT else complex(1)

    def from_fraction(self, value: Fraction) -> Scalar:
        """Convert an exact literal into this mode's scalar type."""
        if self is Mode.EXACT:
            return Fraction(value)
        out = complex(value.numerator / value.denominator
                      if abs(value.numerator) < 2 ** 52 and value.denominator < 2 ** 52
                      else float(value))
        if not (math.isfinite(out.real) and math.isfinite(out.imag)):
            raise CarlemanError(f"coefficient {value} overflows double precision")
        return out

    def matches(self, value: Scalar) -> bool:
        if self is Mode.EXACT:
            return isinstance(value, Fraction)
        return isinstance(value, complex)


def mode_of(value: Scalar) -> Mode:
    return Mode.EXACT if isinstance(value, Fraction) else Mode.FLOAT


def scalar_abs(value: Scalar):
    """Magnitude, exact for Fraction inputs."""
    return abs(value)


def sort_key(value: Scalar):
    """Deterministic ordering key; exact values sort numerically,
    floats by magnitude then phase."""
    if isinstance(value, Fraction):
        return (value,)
    return (abs(value), math.atan2(value.imag, value.real), value.real, value.imag)


def nearly_equal(a: Scalar, b: Scalar, tol: float = 1e-9) -> bool:
    """Equality up to tol, relative to the larger magnitude (Float);
    exact equality in Exact mode."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    scale = max(1.0, abs(a), abs(b))
    return abs(a - b) <= tol * scale


def format_scalar(value: Scalar) -> str:
    """Human-readable rendering: 'p/q' or integer for exact values,
    repr floats otherwise (real part alone when imag is zero)."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if value.imag == 0:
        return repr(value.real)
    return repr(value)


def scalar_to_json(value: Scalar):
    """JSON form: exact scalars as strings, floats as [re, im] pairs."""
    if isinstance(value, Fraction):
        return format_scalar(value)
    return [value.real, value.imag]


def scalar_from_json(mode: Mode, value) -> Scalar:
    """Inverse of scalar_to_json; also tolerant of bare JSON numbers."""
    if mode is Mode.EXACT:
        if isinstance(value, bool) or isinstance(value, (list, tuple, dict)):
            raise CarlemanError(f"cannot read {value!r} as an exact scalar")
        if isinstance(value, float):
            # decimal text keeps user intent; binary floats would surprise
            return Fraction(repr(value))
        return Fraction(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise CarlemanError(f"float scalar pair must have 2 entries, got {len(value)}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(Fraction(value))
    return complex(value)


def parse_scalar_text(mode: Mode, text: str) -> Scalar:
    """Parse a user-typed scalar: 'p/q', integer, or decimal."""
    text = text.strip()
    try:
        frac = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise CarlemanError(f"cannot parse scalar {text!r}") from exc
    return mode.from_fraction(frac)
