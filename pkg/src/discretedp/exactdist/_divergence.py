"""Divergences between mass functions, with tails folded into enclosures."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Union

from ..bigreal import BigReal, default_precision_bits
from ..errors import InvalidParam, SupportMismatch
from ._mass import MassFunction, mass_lower, mass_upper

MassValue = Union[Fraction, BigReal]


def renyi_divergence(
    p: MassFunction,
    q: MassFunction,
    alpha: Fraction,
    extra_tail: MassValue = Fraction(0),
    precision: Optional[int] = None,
) -> BigReal:
    """(1/(alpha-1)) log sum P(z)^alpha Q(z)^(1-alpha) over P's support.

    `extra_tail` is an upper bound, supplied by the caller from analytic
    knowledge of the two distributions, on the off-window part of the sum;
    it widens the enclosure on the high side. Raises SupportMismatch when
    P puts mass on a point where Q certifies none.
    """
    alpha = Fraction(alpha)
    if alpha <= 1:
        raise InvalidParam("Renyi order must exceed 1")
    bits = precision if precision is not None else default_precision_bits()
    total: Optional[BigReal] = None
    for z, pm in p.masses.items():
        if mass_upper(pm) == 0:
            continue
        qm = q.masses.get(z)
        if qm is None or mass_upper(qm) == 0:
            raise SupportMismatch(f"no base mass at point {z!r}")
        p_enc = BigReal.coerce(pm, bits)
        q_enc = BigReal.coerce(qm, bits)
        if q_enc.lower <= 0:
            raise SupportMismatch(f"base mass at {z!r} cannot be certified positive")
        if p_enc.lower <= 0:
            # Enclosure touches zero: contribute [0, hi^alpha * ...] soundly.
            hi_part = BigReal.from_fraction(p_enc.upper, bits).pow_frac(alpha) * (
                q_enc.pow_frac(1 - alpha)
            )
            term = BigReal.interval(0, hi_part.upper, bits)
        else:
            term = p_enc.pow_frac(alpha) * q_enc.pow_frac(1 - alpha)
        total = term if total is None else total + term
    if total is None:
        raise InvalidParam("empty mass function")
    tail_hi = mass_upper(extra_tail)
    if tail_hi < 0:
        raise InvalidParam("negative tail")
    total = total + BigReal.interval(0, tail_hi, bits)
    return total.log() / (alpha - 1)


def tv_distance(p: MassFunction, q: MassFunction) -> BigReal:
    """Half the absolute mass difference, tails added on the high side."""
    bits = max(p.precision or default_precision_bits(), q.precision or default_precision_bits())
    points = set(p.masses) | set(q.masses)
    lo_sum = Fraction(0)
    hi_sum = Fraction(0)
    for z in points:
        pm, qm = p.mass(z), q.mass(z)
        d_lo = mass_lower(pm) - mass_upper(qm)
        d_hi = mass_upper(pm) - mass_lower(qm)
        # |d| over the interval [d_lo, d_hi]:
        if d_lo >= 0:
            lo_sum += d_lo
            hi_sum += d_hi
        elif d_hi <= 0:
            lo_sum += -d_hi
            hi_sum += -d_lo
        else:
            hi_sum += max(-d_lo, d_hi)
    half = Fraction(1, 2)
    tail = (p.tail_upper() + q.tail_upper()) * half
    return BigReal.interval(half * lo_sum, half * hi_sum + tail, bits)
