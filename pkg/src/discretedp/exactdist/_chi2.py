"""Chi-squared upper-tail probabilities with certified enclosures.

p-values for the audit tests are computed from the regularized upper
incomplete gamma function Q(df/2, x/2), evaluated by the lower-series
expansion with an explicit geometric tail bound. Everything runs in
BigReal interval arithmetic, so a reported p-value is an enclosure of the
true tail probability, and verdicts against a significance level are
sound.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Optional, Union

from ..bigreal import BigReal, default_precision_bits
from ..errors import InvalidParam

_ONE = Fraction(1)


def _gamma_half_integer(two_a: int, precision: int) -> BigReal:
    """Gamma(two_a / 2) for positive integer two_a."""
    if two_a <= 0:
        raise InvalidParam("gamma argument must be positive")
    if two_a % 2 == 0:
        return BigReal.from_fraction(Fraction(factorial(two_a // 2 - 1)), precision)
    m = (two_a - 1) // 2
    # Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!)
    coef = Fraction(factorial(2 * m), 4**m * factorial(m))
    return BigReal.pi(precision).sqrt() * coef


def _pow_half_integer(x: BigReal, two_a: int) -> BigReal:
    """x ** (two_a / 2) for x >= 0."""
    if two_a % 2 == 0:
        return x ** (two_a // 2)
    return (x ** ((two_a - 1) // 2)) * x.sqrt()


def chi2_sf(
    stat: Union[BigReal, Fraction, int],
    df: int,
    precision: Optional[int] = None,
) -> BigReal:
    """Enclosure of P[Chi2(df) >= stat]."""
    if df < 1:
        raise InvalidParam("degrees of freedom must be >= 1")
    bits = precision if precision is not None else default_precision_bits()
    x = BigReal.coerce(stat, bits) * Fraction(1, 2)
    if x.upper <= 0:
        return BigReal.interval(1, 1, bits)
    if x.lower < 0:
        # Statistic enclosures are nonnegative by construction; a dip below
        # zero is rounding slop.
        x = BigReal.interval(Fraction(0), x.upper, bits)
    a = Fraction(df, 2)
    if x.lower > 4 * a + 200:
        return _sf_far_tail(x, df, bits)
    return _sf_series(x, df, bits)


def _sf_series(x: BigReal, df: int, bits: int) -> BigReal:
    """Q(a, x) = 1 - x^a e^-x / Gamma(a) * sum_n x^n / (a (a+1) ... (a+n))."""
    a = Fraction(df, 2)
    term = BigReal.from_fraction(1 / a, bits)
    total = term
    n = 0
    x_hi = x.upper
    cutoff = Fraction(1, 2**(bits + 16))
    while True:
        n += 1
        term = (term * x) / (a + n)
        total = total + term
        # Once the term ratio is below 1/2 the remaining tail is at most
        # the current term; stop when that is negligible relative to the sum.
        if x_hi / (a + n + 1) <= Fraction(1, 2):
            if term.upper <= cutoff * total.lower or term.upper == 0:
                break
        if n > 10_000_000:
            raise InvalidParam("incomplete gamma series failed to converge")
    tail = BigReal.interval(0, term.upper, bits)
    series = total + tail
    p = _pow_half_integer(x, df) * (-x).exp() * series / _gamma_half_integer(df, bits)
    q = 1 - p
    hi = min(_ONE, max(Fraction(0), q.upper))
    lo = max(Fraction(0), min(q.lower, hi))
    return BigReal.interval(lo, hi, bits)


def _sf_far_tail(x: BigReal, df: int, bits: int) -> BigReal:
    """For x much larger than a: 0 <= Q(a,x) <= x^a e^-x / (Gamma(a) (x-a+1))."""
    a = Fraction(df, 2)
    bound = (
        _pow_half_integer(x, df)
        * (-x).exp()
        / (_gamma_half_integer(df, bits) * (x - (a - 1)))
    )
    hi = min(_ONE, max(Fraction(0), bound.upper))
    return BigReal.interval(0, hi, bits)
