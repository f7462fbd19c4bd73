"""Finitely-supported mass functions with certified tail bounds.

A MassFunction lists exact masses on finitely many points and carries an
upper bound on everything it does not list. Masses are either exact
rationals (empirical frequencies, loop unrollings) or BigReal enclosures
(anything involving e^x). All aggregate computations stay sound: rational
where possible, interval otherwise.

Points are arbitrary hashable values. Integer-supported instances expose
a [lo, hi] window and JSON serialization; loop unrollings use structured
states (tuples) as points.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

from ..bigreal import BigReal, _mp_from_fraction, default_precision_bits
from ..errors import InvalidParam

from mpmath import mp

MassValue = Union[Fraction, BigReal]

_ZERO = Fraction(0)


# isinstance against Fraction routes through the Rational ABC metaclass,
# which is far too slow for the per-point hot paths below; BigReal is a
# plain class, so dispatch on it instead.


def mass_lower(m: MassValue) -> Fraction:
    return m.lower if isinstance(m, BigReal) else m


def mass_upper(m: MassValue) -> Fraction:
    return m.upper if isinstance(m, BigReal) else m


def _bits_of(a: MassValue, b: MassValue) -> int:
    bits = 0
    if isinstance(a, BigReal):
        bits = a.precision
    if isinstance(b, BigReal):
        bits = max(bits, b.precision)
    return bits or default_precision_bits()


def mass_add(a: MassValue, b: MassValue) -> MassValue:
    if not (isinstance(a, BigReal) or isinstance(b, BigReal)):
        return a + b
    # Endpoint sums are exact; skip the rounded interval context.
    return BigReal.from_endpoints(
        mass_lower(a) + mass_lower(b), mass_upper(a) + mass_upper(b), _bits_of(a, b)
    )


def mass_mul(a: MassValue, b: MassValue) -> MassValue:
    if not (isinstance(a, BigReal) or isinstance(b, BigReal)):
        return a * b
    a_lo, a_hi = mass_lower(a), mass_upper(a)
    b_lo, b_hi = mass_lower(b), mass_upper(b)
    if a_lo < 0 or b_lo < 0:
        return BigReal.coerce(a) * b
    # Masses are nonnegative, so the endpoint products are the exact hull.
    return BigReal.from_endpoints(a_lo * b_lo, a_hi * b_hi, _bits_of(a, b))


def _mass_str(m: MassValue) -> str:
    if isinstance(m, BigReal):
        return m.approx_str(24)
    return mp.nstr(_mp_from_fraction(Fraction(m)), 24)


class MassFunction:
    """Masses on listed points plus a bound on the unlisted remainder."""

    __slots__ = ("masses", "tail_bound", "precision", "draws")

    def __init__(
        self,
        masses: Mapping[Any, MassValue],
        tail_bound: MassValue = _ZERO,
        precision: Optional[int] = None,
        draws: Optional[int] = None,
    ):
        for point, m in masses.items():
            if mass_lower(m) < 0:
                raise InvalidParam(f"negative mass at {point!r}")
        if mass_lower(tail_bound) < 0:
            raise InvalidParam("negative tail bound")
        self.masses: Dict[Any, MassValue] = dict(masses)
        self.tail_bound = tail_bound
        self.precision = precision
        self.draws = draws

    def mass(self, point: Any) -> MassValue:
        return self.masses.get(point, _ZERO)

    def support(self) -> list:
        points = list(self.masses)
        try:
            return sorted(points)
        except TypeError:
            return points

    def has_integer_support(self) -> bool:
        return all(isinstance(p, int) for p in self.masses)

    def window(self) -> Tuple[int, int]:
        if not self.masses or not self.has_integer_support():
            raise InvalidParam("window requires nonempty integer support")
        points = self.masses.keys()
        return min(points), max(points)

    def total_lower(self) -> Fraction:
        return sum((mass_lower(m) for m in self.masses.values()), _ZERO)

    def total_upper(self) -> Fraction:
        return sum((mass_upper(m) for m in self.masses.values()), _ZERO)

    def tail_upper(self) -> Fraction:
        return mass_upper(self.tail_bound)

    def normalized_within(self, tol: Fraction) -> bool:
        """Listed mass plus tail covers 1 within tol, and never exceeds 1+tol."""
        covers = self.total_upper() + self.tail_upper() >= 1 - tol
        bounded = self.total_lower() <= 1 + tol
        return covers and bounded

    def translate(self, shift: int) -> "MassFunction":
        if not self.has_integer_support():
            raise InvalidParam("translate requires integer support")
        return MassFunction(
            {p + shift: m for p, m in self.masses.items()},
            self.tail_bound,
            self.precision,
            self.draws,
        )

    def map_points(self, fn: Callable[[Any], Any]) -> "MassFunction":
        """Pushforward along fn; masses of colliding points are summed."""
        out: Dict[Any, MassValue] = {}
        for p, m in self.masses.items():
            q = fn(p)
            out[q] = mass_add(out[q], m) if q in out else m
        return MassFunction(out, self.tail_bound, self.precision, self.draws)

    def restrict(self, points: Iterable[Any]) -> "MassFunction":
        """Keep only `points`; the discarded mass is folded into the tail."""
        keep = set(points)
        kept: Dict[Any, MassValue] = {}
        dropped: MassValue = _ZERO
        for p, m in self.masses.items():
            if p in keep:
                kept[p] = m
            else:
                dropped = mass_add(dropped, m)
        return MassFunction(
            kept, mass_add(self.tail_bound, dropped), self.precision, self.draws
        )

    def to_json_dict(self) -> dict:
        lo, hi = self.window()
        bits = self.precision if self.precision is not None else default_precision_bits()
        return {
            "lo": lo,
            "hi": hi,
            "masses": {str(p): _mass_str(self.masses[p]) for p in sorted(self.masses)},
            "tail_bound": _mass_str(self.tail_bound),
            "precision_bits": bits,
        }

    def __repr__(self) -> str:
        n = len(self.masses)
        return f"MassFunction({n} points, tail <= {_mass_str(self.tail_bound)})"
