"""Exact rational polynomials and the Routh-Hurwitz stability test.

Everything in this module works in exact `fractions.Fraction` arithmetic so
that stability verdicts on boundary cases are decided without floating-point
error. Marginal polynomials (roots on the imaginary axis) are *not* Hurwitz.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

RationalLike = Union[int, float, str, Fraction]

# HurwitzVerdict failure reasons
NONPOSITIVE_COEFFICIENT = "nonpositive_coefficient"
ZERO_PIVOT = "zero_pivot"
SIGN_CHANGE = "sign_change"


def as_fraction(value: RationalLike) -> Fraction:
    """Convert to an exact Fraction.

    Floats convert to their exact binary value; strings accept both
    decimal ("0.5") and ratio ("1/2") forms.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError(f"cannot convert non-finite float {value!r}")
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


@dataclass(frozen=True)
class Polynomial:
    """Real-coefficient univariate polynomial with exact rational
    coefficients, stored in descending powers.

    The leading coefficient is nonzero unless the polynomial is identically
    zero (represented as a single zero coefficient).
    """

    coeffs: tuple[Fraction, ...]

    def __init__(self, coeffs: Iterable[RationalLike]):
        c = tuple(as_fraction(x) for x in coeffs)
        if not c:
            c = (Fraction(0),)
        i = 0
        while i < len(c) - 1 and c[i] == 0:
            i += 1
        object.__setattr__(self, "coeffs", c[i:])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    def __call__(self, x: RationalLike) -> Fraction:
        x = as_fraction(x)
        acc = Fraction(0)
        for c in self.coeffs:
            acc = acc * x + c
        return acc

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if not isinstance(other, Polynomial):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return Polynomial([0])
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(out)

    def scaled(self, factor: RationalLike) -> "Polynomial":
        f = as_fraction(factor)
        return Polynomial([f * c for c in self.coeffs])

    def __str__(self) -> str:
        n = self.degree
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0 and n > 0:
                continue
            p = n - k
            if p == 0:
                parts.append(f"{c}")
            elif p == 1:
                parts.append(f"{c}*s" if c != 1 else "s")
            else:
                parts.append(f"{c}*s^{p}" if c != 1 else f"s^{p}")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class HurwitzVerdict:
    """Outcome of a strict Hurwitz test.

    ``stable`` is True iff every root has strictly negative real part.  On
    failure, ``failure_reason`` is one of NONPOSITIVE_COEFFICIENT,
    ZERO_PIVOT or SIGN_CHANGE; ``failure_power`` is the power of s whose
    Routh row (or coefficient) triggered the failure, and ``failure_value``
    the offending first-column entry.
    """

    stable: bool
    failure_reason: str | None = None
    failure_power: int | None = None
    failure_value: Fraction | None = None

    def __post_init__(self):
        if self.stable != (self.failure_reason is None):
            raise ValueError("stable verdict must not carry a failure reason")

    def __bool__(self) -> bool:
        return self.stable


_STABLE = HurwitzVerdict(True)


def routh_hurwitz(p: Polynomial) -> HurwitzVerdict:
    """Exact Routh-Hurwitz test: stable iff all roots of ``p`` lie in the
    open left half-plane.

    A zero first-column entry anywhere in the array (marginal case) yields
    ``stable == False`` with reason ZERO_PIVOT; no epsilon perturbation is
    applied. Raises ValueError for the zero polynomial or degree 0.
    """
    if p.is_zero or p.degree < 1:
        raise ValueError("routh_hurwitz requires a polynomial of degree >= 1")
    coeffs = p.coeffs
    if coeffs[0] < 0:
        coeffs = tuple(-c for c in coeffs)
    m = p.degree
    # All-positive coefficients are necessary for Hurwitzness.
    for k, c in enumerate(coeffs):
        if c <= 0:
            return HurwitzVerdict(
                False, NONPOSITIVE_COEFFICIENT,
                failure_power=m - k, failure_value=c,
            )
    if m == 1:
        return _STABLE
    width = len(coeffs[0::2])
    prev = list(coeffs[0::2]) + [Fraction(0)] * (width - len(coeffs[0::2]))
    cur = list(coeffs[1::2]) + [Fraction(0)] * (width - len(coeffs[1::2]))
    for power in range(m - 2, -1, -1):
        pivot = cur[0]
        nxt = [
            (pivot * prev[j + 1] - prev[0] * cur[j + 1]) / pivot
            for j in range(width - 1)
        ] + [Fraction(0)]
        entry = nxt[0]
        if entry == 0:
            return HurwitzVerdict(
                False, ZERO_PIVOT, failure_power=power, failure_value=entry
            )
        if entry < 0:
            return HurwitzVerdict(
                False, SIGN_CHANGE, failure_power=power, failure_value=entry
            )
        prev, cur = cur, nxt
    return _STABLE


def simplest_fraction(lo: Fraction, hi: Fraction) -> Fraction:
    """Smallest-denominator fraction x with lo < x <= hi (0 <= lo < hi).

    Stern-Brocot / continued-fraction descent; used to snap a bisection
    bracket onto an exact rational stability boundary.
    """
    if not (0 <= lo < hi):
        raise ValueError("simplest_fraction requires 0 <= lo < hi")
    return _simplest(lo, hi)


def _simplest(lo: Fraction, hi: Fraction) -> Fraction:
    floor_lo = lo.numerator // lo.denominator
    if floor_lo + 1 <= hi:
        return Fraction(floor_lo + 1)
    if lo == floor_lo:
        # (lo, hi] sits inside (lo, lo+1): x = lo + 1/y with integer y
        # minimal, i.e. y = ceil(1/(hi - lo)).
        q = 1 / (hi - floor_lo)
        y = -((-q.numerator) // q.denominator)
        return floor_lo + Fraction(1, y)
    # lo and hi live in the same unit cell: recurse on the reciprocal of the
    # fractional parts. x = floor_lo + 1/y with lo < x <= hi  <=>
    # 1/(hi - floor_lo) <= y < 1/(lo - floor_lo); the half-open side flips.
    y = _simplest_closed_open(1 / (hi - floor_lo), 1 / (lo - floor_lo))
    return floor_lo + 1 / y


def _simplest_closed_open(lo: Fraction, hi: Fraction) -> Fraction:
    # smallest-denominator y with lo <= y < hi, for 0 < lo < hi
    floor_lo = lo.numerator // lo.denominator
    if lo == floor_lo:
        return lo
    if floor_lo + 1 < hi:
        return Fraction(floor_lo + 1)
    y = _simplest(1 / (hi - floor_lo), 1 / (lo - floor_lo))
    return floor_lo + 1 / y
