"""Observer-parameterisation stability analysis: builds the error-system
companion matrices, decides tolerability of an uncertain input-gain ratio by
exact Routh arithmetic, and computes the maximal tolerable ratio interval.

The object of study is the ratio b_delta/b_bar between the unknown deviation
of the input gain and its nominal value. For observer coefficients
phi_1..phi_{n+1}, the ratio is tolerable exactly when

    s^{n+1} + phi_1 s^n + ... + phi_n s + phi_{n+1} (1 + ratio)

is Hurwitz; the tolerable set is always an open interval (-1, upper).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .ratpoly import (
    ZERO_PIVOT,
    HurwitzVerdict,
    Polynomial,
    RationalLike,
    as_fraction,
    routh_hurwitz,
    simplest_fraction,
)

PROBE_LIMIT = 10**12
BISECT_TOL = Fraction(1, 10**6)


@dataclass(frozen=True)
class PhiVector:
    """Positive observer coefficients phi_1..phi_{n+1} whose base polynomial
    s^{n+1} + phi_1 s^n + ... + phi_{n+1} is Hurwitz (checked here)."""

    phi: tuple[Fraction, ...]

    def __init__(self, phi: Iterable[RationalLike]):
        values = tuple(as_fraction(x) for x in phi)
        if len(values) < 2:
            raise ValueError("phi needs at least two entries (n >= 1)")
        if any(v <= 0 for v in values):
            raise ValueError(f"phi entries must be positive, got {values}")
        object.__setattr__(self, "phi", values)
        verdict = routh_hurwitz(self.base_polynomial())
        if not verdict.stable:
            raise ValueError(
                "phi base polynomial is not Hurwitz "
                f"({verdict.failure_reason} at s^{verdict.failure_power})"
            )

    @property
    def n(self) -> int:
        return len(self.phi) - 1

    def base_polynomial(self) -> Polynomial:
        return Polynomial((Fraction(1),) + self.phi)


def bandwidth_phi(n: int) -> PhiVector:
    """Binomial coefficients phi_i = C(n+1, i), making the base polynomial
    (s+1)^{n+1} so all observer error eigenvalues sit at -omega_o."""
    if not 1 <= n <= 8:
        raise ValueError(f"order n must be in [1, 8], got {n}")
    return PhiVector([math.comb(n + 1, i) for i in range(1, n + 2)])


def build_a1(phi: PhiVector) -> np.ndarray:
    """(n+1)x(n+1) companion-form matrix: first column -phi_1..-phi_{n+1},
    ones on the superdiagonal. Its characteristic polynomial is the phi base
    polynomial."""
    m = phi.n + 1
    a = np.zeros((m, m))
    a[:, 0] = [-float(v) for v in phi.phi]
    for i in range(m - 1):
        a[i, i + 1] = 1.0
    return a


def build_a2(phi: PhiVector, ratio: RationalLike) -> np.ndarray:
    """Same as build_a1 except the bottom-left entry is scaled to
    -phi_{n+1} * (1 + ratio)."""
    a = build_a1(phi)
    a[-1, 0] = -float(phi.phi[-1] * (1 + as_fraction(ratio)))
    return a


def char_poly_a2(phi: PhiVector, ratio: RationalLike) -> Polynomial:
    """Exact characteristic polynomial of build_a2(phi, ratio):
    s^{n+1} + phi_1 s^n + ... + phi_n s + phi_{n+1} (1 + ratio)."""
    r = as_fraction(ratio)
    coeffs = (Fraction(1),) + phi.phi[:-1] + (phi.phi[-1] * (1 + r),)
    return Polynomial(coeffs)


def is_well_performed(phi: PhiVector, ratio: RationalLike) -> bool:
    """True iff the gain ratio is strictly tolerable (error-system matrix
    Hurwitz); decided in exact rational arithmetic."""
    return routh_hurwitz(char_poly_a2(phi, ratio)).stable


@dataclass(frozen=True)
class GainInterval:
    """Maximal tolerable interval of gain ratios, always open at both ends:
    (-1, upper), with upper possibly +infinity (``unbounded``) or the whole
    interval ``empty``.

    ``upper`` is the supremum of the tolerable set; the endpoint itself is
    marginal, never tolerable. When the boundary is irrational, ``upper`` is
    the stable end of a bisection bracket of width ``upper_tolerance`` and
    ``upper_exact`` is False. ``boundary`` carries the violated Routh entry
    at (or just beyond) the endpoint. ``unbounded_proven`` distinguishes the
    exact degree-2 coefficient-positivity proof from the heuristic
    probe-to-1e12 declaration.
    """

    lower: Fraction
    upper: Fraction | None
    unbounded: bool = False
    unbounded_proven: bool = False
    upper_exact: bool = True
    upper_tolerance: Fraction | None = None
    empty: bool = False
    boundary: HurwitzVerdict | None = None

    def __post_init__(self):
        if self.lower != -1:
            raise ValueError("gain intervals always start at -1")
        if not self.empty and not self.unbounded and self.upper is not None:
            if self.upper <= self.lower:
                raise ValueError("upper endpoint must exceed -1")

    def contains(self, ratio: RationalLike) -> bool:
        """Strict interior membership (the endpoints are excluded)."""
        if self.empty:
            return False
        r = as_fraction(ratio)
        if r <= self.lower:
            return False
        return self.unbounded or r < self.upper


def gain_margin(
    phi: PhiVector,
    tol: Fraction = BISECT_TOL,
    probe_limit: int = PROBE_LIMIT,
) -> GainInterval:
    """Maximal interval of tolerable gain ratios for the given phi.

    The lower end is exactly -1 (the constant coefficient must stay
    positive). The upper end is found by geometric probing at ratios 1, 2,
    4, ... up to ``probe_limit``; if every probe is tolerable the interval
    is flagged unbounded (proven exactly for degree-2 base polynomials,
    heuristic otherwise). Otherwise the boundary is bisected with exact
    Routh verdicts to width <= ``tol`` and, when the bracket contains a
    rational point certified marginal (zero Routh pivot), reported exactly.
    """
    last_stable = Fraction(0)
    first_unstable = None
    probe = Fraction(1)
    while probe <= probe_limit:
        if is_well_performed(phi, probe):
            last_stable = probe
        else:
            first_unstable = probe
            break
        probe *= 2
    if first_unstable is None:
        proven = phi.n + 1 <= 2
        return GainInterval(
            lower=Fraction(-1), upper=None,
            unbounded=True, unbounded_proven=proven,
        )
    lo, hi = last_stable, first_unstable
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if is_well_performed(phi, mid):
            lo = mid
        else:
            hi = mid
    candidate = simplest_fraction(lo, hi)
    verdict = routh_hurwitz(char_poly_a2(phi, candidate))
    if (
        not verdict.stable
        and verdict.failure_reason == ZERO_PIVOT
        and is_well_performed(phi, (lo + candidate) / 2)
    ):
        return GainInterval(
            lower=Fraction(-1), upper=candidate,
            upper_exact=True, boundary=verdict,
        )
    return GainInterval(
        lower=Fraction(-1), upper=lo,
        upper_exact=False, upper_tolerance=hi - lo,
        boundary=routh_hurwitz(char_poly_a2(phi, hi)),
    )


def gain_margin_values(values: Sequence[RationalLike]) -> GainInterval:
    """gain_margin for raw coefficient values; a positive phi whose base
    polynomial is not Hurwitz yields the flagged-empty interval instead of
    an error. Malformed phi (nonpositive entries, fewer than two) still
    raises ValueError."""
    coeffs = tuple(as_fraction(v) for v in values)
    if len(coeffs) < 2:
        raise ValueError("phi needs at least two entries (n >= 1)")
    if any(v <= 0 for v in coeffs):
        raise ValueError(f"phi entries must be positive, got {coeffs}")
    base = Polynomial((Fraction(1),) + coeffs)
    if not routh_hurwitz(base).stable:
        return GainInterval(lower=Fraction(-1), upper=None, empty=True)
    return gain_margin(PhiVector(coeffs))


def lemma_range(n: int) -> GainInterval:
    """Previously published sufficient range (-1, 1 + 2/n) under the
    binomial bandwidth parameterisation."""
    if n < 1:
        raise ValueError(f"order n must be >= 1, got {n}")
    return GainInterval(lower=Fraction(-1), upper=Fraction(n + 2, n))


@dataclass(frozen=True)
class TableRow:
    n: int
    margin: GainInterval
    lemma: GainInterval


def table_report(max_n: int) -> list[TableRow]:
    """One row per order n = 1..max_n comparing the exact tolerable-ratio
    interval under bandwidth phi with the prior sufficient range."""
    if not 1 <= max_n <= 8:
        raise ValueError(f"max_n must be in [1, 8], got {max_n}")
    return [
        TableRow(n, gain_margin(bandwidth_phi(n)), lemma_range(n))
        for n in range(1, max_n + 1)
    ]


N4_FOOTNOTE = (
    "note: the n=4 upper bound differs from the commonly cited value 4; "
    "exact Routh analysis of s^5+5s^4+10s^3+10s^2+5s+k gives "
    "k_max=(sqrt(128000)-350)/2, i.e. ratio ~= 2.8854382."
)


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_interval(interval: GainInterval) -> str:
    if interval.empty:
        return "empty"
    if interval.unbounded:
        return "(-1, inf)"
    if interval.upper_exact:
        return f"(-1, {format_fraction(interval.upper)})"
    return f"(-1, ~{float(interval.upper):.7f})"


def _upper_float(interval: GainInterval) -> float:
    if interval.unbounded:
        return math.inf
    return float(interval.upper)


def table_csv(rows: Sequence[TableRow]) -> str:
    """CSV serialisation: header n,theorem_lower,theorem_upper,lemma_lower,
    lemma_upper; floats use shortest round-trip formatting."""
    lines = ["n,theorem_lower,theorem_upper,lemma_lower,lemma_upper"]
    for row in rows:
        lines.append(
            f"{row.n},{float(row.margin.lower)!r},{_upper_float(row.margin)!r},"
            f"{float(row.lemma.lower)!r},{_upper_float(row.lemma)!r}"
        )
    return "\n".join(lines) + "\n"


def table_text(rows: Sequence[TableRow]) -> str:
    """Aligned-text rendering; carries the n=4 footnote when applicable."""
    header = f"{'n':>2}  {'tolerable range':<22}  {'prior sufficient range':<22}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.n:>2}  {format_interval(row.margin):<22}  "
            f"{format_interval(row.lemma):<22}"
        )
    if any(row.n == 4 for row in rows):
        lines.append(N4_FOOTNOTE)
    return "\n".join(lines) + "\n"
