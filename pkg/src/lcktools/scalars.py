"""Scalar arithmetic for the combinatorial layer.

Two modes coexist.  Exact mode holds ints and Fractions and compares with
``==``; it is the default and everything downstream of it stays exact.
Floating mode holds floats (or complex values) and compares with an absolute
tolerance, 1e-12 unless overridden.  A collection is exact only if every
member is; a single float anywhere switches the containing object to floating
comparisons.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Scalar = Union[int, Fraction, float, complex]

#: absolute tolerance for overlap-constancy checks in floating mode
OVERLAP_TOL = 1e-12

ZERO = Fraction(0)


def is_exact(value: Scalar) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def all_exact(values: Iterable[Scalar]) -> bool:
    return all(is_exact(v) for v in values)


def coerce(value: Scalar) -> Scalar:
    """Normalize ints to Fraction; leave floats and complex alone."""
    if isinstance(value, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (Fraction, float, complex)):
        return value
    raise TypeError(f"unsupported scalar type {type(value).__name__}")


def scalars_equal(a: Scalar, b: Scalar, exact: bool, tol: float = OVERLAP_TOL) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= tol


def format_scalar(value: Scalar) -> object:
    """JSON encoding: exact scalars as strings, floats as numbers."""
    if is_exact(value):
        return str(Fraction(value))
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return float(value)


def parse_scalar(obj: object) -> Scalar:
    """Inverse of format_scalar; also accepts decimal strings like "0.25"."""
    if isinstance(obj, str):
        return Fraction(obj)
    if isinstance(obj, bool):
        raise ValueError("bool is not a scalar")
    if isinstance(obj, int):
        return Fraction(obj)
    if isinstance(obj, float):
        return obj
    if isinstance(obj, dict) and set(obj) == {"re", "im"}:
        return complex(obj["re"], obj["im"])
    raise ValueError(f"cannot parse scalar from {obj!r}")
