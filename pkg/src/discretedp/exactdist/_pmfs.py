"""Closed-form distribution oracles with certified truncation tails.

These evaluate the target laws of the samplers directly from their
formulas, independently of any sampling code path:

  geometric        (1-t) t^(z-1) on z >= 1
  two-sided decay  ((e^(1/t)-1)/(e^(1/t)+1)) e^(-|z|/t) on all integers
  bell curve       e^(-(z-mu)^2 / 2 sigma^2) / normalizer on all integers

Window truncations carry analytic series tail bounds (geometric-series
comparisons), never sampled estimates. Scale parameters are rationals;
everything irrational lives in BigReal enclosures.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import ceil, isqrt
from typing import Optional, Tuple, Union

from ..bigreal import BigReal, default_precision_bits
from ..errors import InvalidParam
from ._mass import MassFunction

ScaleLike = Union[Fraction, int, Tuple[int, int]]


def _as_fraction(value) -> Fraction:
    if hasattr(value, "num") and hasattr(value, "den"):
        return Fraction(value.num, value.den)
    if isinstance(value, tuple):
        return Fraction(*value)
    return Fraction(value)


# -- geometric -------------------------------------------------------------


def geo_pmf(t: Union[Fraction, BigReal], z: int):
    """Mass of the first-failure count: 0 at z <= 0, (1-t) t^(z-1) at z >= 1."""
    if isinstance(t, BigReal):
        if t.lower < 0 or not t.lt(1):
            raise InvalidParam("geometric parameter must lie in [0, 1)")
        if z <= 0:
            return Fraction(0)
        return (1 - t) * t ** (z - 1)
    t = Fraction(t)
    if not 0 <= t < 1:
        raise InvalidParam("geometric parameter must lie in [0, 1)")
    if z <= 0:
        return Fraction(0)
    return (1 - t) * t ** (z - 1)


# -- two-sided exponential (discrete Laplace law) ---------------------------


def default_laplace_halfwidth(scale: Fraction) -> int:
    return ceil(60 * scale)


@lru_cache(maxsize=256)
def _laplace_parts(scale: Fraction, bits: int) -> Tuple[BigReal, BigReal, BigReal]:
    """(peak mass, decay ratio r = e^(-1/t), 1 - r) at the given precision."""
    e_inv_t = (BigReal.from_fraction(1 / scale, bits)).exp()
    peak = (e_inv_t - 1) / (e_inv_t + 1)
    r = 1 / e_inv_t
    return peak, r, 1 - r


def laplace_pmf(scale: ScaleLike, z: int, precision: Optional[int] = None) -> BigReal:
    """((e^(1/t)-1)/(e^(1/t)+1)) e^(-|z|/t) for scale t > 0."""
    t = _as_fraction(scale)
    if t <= 0:
        raise InvalidParam("scale must be positive")
    bits = precision if precision is not None else default_precision_bits()
    peak, r, _ = _laplace_parts(t, bits)
    return peak * r ** abs(z)


def laplace_cdf(scale: ScaleLike, z: int, precision: Optional[int] = None) -> BigReal:
    """P[X <= z] in closed form via the two geometric half-sums."""
    t = _as_fraction(scale)
    if t <= 0:
        raise InvalidParam("scale must be positive")
    bits = precision if precision is not None else default_precision_bits()
    peak, r, one_minus_r = _laplace_parts(t, bits)
    if z < 0:
        return peak * r ** (-z) / one_minus_r
    return 1 - peak * r ** (z + 1) / one_minus_r


def laplace_mass_function(
    scale: ScaleLike,
    halfwidth: Optional[int] = None,
    center: int = 0,
    precision: Optional[int] = None,
) -> MassFunction:
    t = _as_fraction(scale)
    if t <= 0:
        raise InvalidParam("scale must be positive")
    bits = precision if precision is not None else default_precision_bits()
    w = halfwidth if halfwidth is not None else default_laplace_halfwidth(t)
    if w < 1:
        raise InvalidParam("halfwidth must be >= 1")
    peak, r, one_minus_r = _laplace_parts(t, bits)
    masses = {center: peak}
    cur = peak
    for k in range(1, w + 1):
        cur = cur * r
        masses[center + k] = cur
        masses[center - k] = cur
    # Two one-sided geometric tails beyond +-w.
    tail = 2 * peak * r ** (w + 1) / one_minus_r
    tail = BigReal.interval(0, tail.upper, bits)
    return MassFunction(masses, tail_bound=tail, precision=bits)


def laplace_cross_tail(
    scale: ScaleLike,
    mu1: int,
    mu2: int,
    alpha: Fraction,
    window: Tuple[int, int],
    precision: Optional[int] = None,
) -> BigReal:
    """Upper bound on sum of P(z)^alpha Q(z)^(1-alpha) outside the window.

    P, Q are discrete Laplace at (mu1, scale) and (mu2, scale).  Beyond a
    window covering both centers the summand is exactly peak * r^(z - m)
    (right side) or peak * r^(m - z) (left side) with
    m = alpha mu1 + (1-alpha) mu2, so each side is a geometric series.
    """
    t = _as_fraction(scale)
    alpha = Fraction(alpha)
    if alpha <= 1:
        raise InvalidParam("alpha must exceed 1")
    bits = precision if precision is not None else default_precision_bits()
    lo, hi = window
    if lo > min(mu1, mu2) or hi < max(mu1, mu2):
        raise InvalidParam("window must cover both centers")
    m = alpha * mu1 + (1 - alpha) * mu2
    peak, r, one_minus_r = _laplace_parts(t, bits)
    right = r.pow_frac(Fraction(hi + 1) - m) / one_minus_r
    left = r.pow_frac(m - (lo - 1)) / one_minus_r
    bound = peak * (left + right)
    return BigReal.interval(0, bound.upper, bits)


# -- discrete bell curve -----------------------------------------------------


def default_gaussian_halfwidth(sigma: Fraction) -> int:
    return ceil(12 * sigma) + 10


@lru_cache(maxsize=256)
def _gaussian_parts(sigma: Fraction, bits: int) -> Tuple[BigReal, BigReal]:
    """(q = e^(-1/(2 sigma^2)), normalizer sum_k q^(k^2)) with certified tail."""
    q = BigReal.from_fraction(Fraction(-1) / (2 * sigma**2), bits).exp()
    radius = default_gaussian_halfwidth(sigma)
    total = BigReal.from_fraction(Fraction(1), bits)
    cur = BigReal.from_fraction(Fraction(1), bits)
    odd = q
    q2 = q * q
    for _ in range(1, radius + 1):
        cur = cur * odd  # q^(k^2) from q^((k-1)^2) times q^(2k-1)
        odd = odd * q2
        total = total + 2 * cur
    tail = _gaussian_weight_tail(q, radius, bits)
    normalizer = total + BigReal.interval(0, (2 * tail).upper, bits)
    return q, normalizer


def _gaussian_weight_tail(q: BigReal, beyond: int, bits: int) -> BigReal:
    """Upper bound on sum_{k > beyond} q^(k^2), one side only.

    Uses k^2 >= (beyond+1)^2 + (beyond+1)(k - beyond - 1), a geometric
    comparison in q^(beyond+1).
    """
    b = beyond + 1
    lead = q ** (b * b)
    ratio = q**b
    bound = lead / (1 - ratio)
    return BigReal.interval(0, bound.upper, bits)


def gaussian_pmf(
    sigma: ScaleLike, mu: int, z: int, precision: Optional[int] = None
) -> BigReal:
    s = _as_fraction(sigma)
    if s <= 0:
        raise InvalidParam("sigma must be positive")
    bits = precision if precision is not None else default_precision_bits()
    q, normalizer = _gaussian_parts(s, bits)
    d = abs(z - mu)
    return q ** (d * d) / normalizer


def gaussian_mass_function(
    sigma: ScaleLike,
    mu: int = 0,
    halfwidth: Optional[int] = None,
    precision: Optional[int] = None,
) -> MassFunction:
    s = _as_fraction(sigma)
    if s <= 0:
        raise InvalidParam("sigma must be positive")
    bits = precision if precision is not None else default_precision_bits()
    w = halfwidth if halfwidth is not None else default_gaussian_halfwidth(s)
    if w < 1:
        raise InvalidParam("halfwidth must be >= 1")
    q, normalizer = _gaussian_parts(s, bits)
    masses = {mu: 1 / normalizer}
    cur = BigReal.from_fraction(Fraction(1), bits)
    odd = q
    q2 = q * q
    for k in range(1, w + 1):
        cur = cur * odd
        odd = odd * q2
        m = cur / normalizer
        masses[mu + k] = m
        masses[mu - k] = m
    tail = 2 * _gaussian_weight_tail(q, w, bits) / normalizer
    tail = BigReal.interval(0, tail.upper, bits)
    return MassFunction(masses, tail_bound=tail, precision=bits)


def gaussian_cross_tail(
    sigma: ScaleLike,
    mu1: int,
    mu2: int,
    alpha: Fraction,
    window: Tuple[int, int],
    precision: Optional[int] = None,
) -> BigReal:
    """Upper bound on sum of P(z)^alpha Q(z)^(1-alpha) outside the window.

    P, Q are the discrete bell curves at (mu1, sigma) and (mu2, sigma).
    The summand collapses to C q^((z-m)^2) with m = alpha mu1 + (1-alpha) mu2
    and C = e^(alpha (alpha-1) (mu1-mu2)^2 / (2 sigma^2)) / normalizer, so both
    off-window sides admit geometric-series bounds.
    """
    s = _as_fraction(sigma)
    alpha = Fraction(alpha)
    if alpha <= 1:
        raise InvalidParam("alpha must exceed 1")
    bits = precision if precision is not None else default_precision_bits()
    lo, hi = window
    m = alpha * mu1 + (1 - alpha) * mu2
    if not lo + 1 <= m <= hi - 1:
        raise InvalidParam("window too narrow for the cross-term center")
    q, normalizer = _gaussian_parts(s, bits)
    coef = (
        BigReal.from_fraction(alpha * (alpha - 1) * (mu1 - mu2) ** 2 / (2 * s**2), bits)
        .exp()
    ) / normalizer

    def one_side(distance: Fraction) -> BigReal:
        # sum over integer points at distances d, d+1, ... from m:
        # q^(d^2) / (1 - q^(2d)) by (d+i)^2 >= d^2 + 2 d i.
        lead = q.pow_frac(distance * distance)
        ratio = q.pow_frac(2 * distance)
        return lead / (1 - ratio)

    left = one_side(m - (lo - 1))
    right = one_side(Fraction(hi + 1) - m)
    bound = coef * (left + right)
    return BigReal.interval(0, bound.upper, bits)
