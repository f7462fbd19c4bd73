"""Arbitrary-precision reals with certified two-sided error bounds.

BigReal wraps an mpmath interval: every value is a pair of exact dyadic
endpoints guaranteed to bracket the true real. Arithmetic rounds outward,
so enclosures stay sound through any chain of operations; what can fail
is only *decisiveness* (an interval too wide to order against a bound),
never correctness. Comparisons therefore return True/False/None, and
`with_refinement` retries a computation at doubled precision until the
question is settled or the cap is hit.

Endpoints are exposed as exact `Fraction`s so downstream code can mix
certified reals with exact rational bookkeeping without float round-trips.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Optional, Union

from mpmath import iv, libmp, mp

from .errors import InvalidParam, PrecisionError

ENV_PRECISION_BITS = "DISCRETE_DP_PRECISION_BITS"
FALLBACK_PRECISION_BITS = 192
MIN_PRECISION_BITS = 16
MAX_PRECISION_BITS = 1 << 14

RationalLike = Union[int, Rational]
BigRealLike = Union["BigReal", int, Rational]


def default_precision_bits() -> int:
    """Working precision in bits, overridable via DISCRETE_DP_PRECISION_BITS."""
    raw = os.environ.get(ENV_PRECISION_BITS)
    if raw is None:
        return FALLBACK_PRECISION_BITS
    try:
        bits = int(raw)
    except ValueError:
        raise InvalidParam(f"{ENV_PRECISION_BITS} must be an integer, got {raw!r}")
    if not MIN_PRECISION_BITS <= bits <= MAX_PRECISION_BITS:
        raise InvalidParam(
            f"{ENV_PRECISION_BITS} must lie in [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}]"
        )
    return bits


@contextmanager
def _prec(bits: int):
    # mpmath's interval context has a single global precision; every BigReal
    # operation pins it for the duration of that operation only.
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


def _fraction_from_mpf(raw) -> Fraction:
    if raw in (libmp.finf, libmp.fninf, libmp.fnan):
        raise PrecisionError("interval endpoint is not finite")
    sign, man, exp, _ = raw
    if man == 0:
        return Fraction(0)
    mag = Fraction(int(man)) * Fraction(2) ** exp
    return -mag if sign else mag


def _iv_from_fraction(value: Rational):
    num = iv.mpf(int(value.numerator))
    den = iv.mpf(int(value.denominator))
    return num / den


def _mp_from_fraction(value: Fraction):
    # Arbitrary-exponent floats; plain float() would over/underflow first.
    with mp.workprec(64):
        return mp.mpf(value.numerator) / mp.mpf(value.denominator)


class BigReal:
    """A real number known only up to a certified enclosing interval."""

    __slots__ = ("_iv", "precision", "_lo", "_hi")

    def __init__(self, interval, precision: int):
        self._iv = interval
        self.precision = precision
        self._lo: Optional[Fraction] = None
        self._hi: Optional[Fraction] = None

    # -- construction -------------------------------------------------

    @classmethod
    def from_fraction(cls, value: RationalLike, precision: Optional[int] = None) -> "BigReal":
        bits = precision if precision is not None else default_precision_bits()
        frac = Fraction(value)
        with _prec(bits):
            return cls(_iv_from_fraction(frac), bits)

    @classmethod
    def from_int(cls, value: int, precision: Optional[int] = None) -> "BigReal":
        return cls.from_fraction(Fraction(value), precision)

    @classmethod
    def pi(cls, precision: Optional[int] = None) -> "BigReal":
        bits = precision if precision is not None else default_precision_bits()
        with _prec(bits):
            return cls(+iv.pi, bits)

    @classmethod
    def coerce(cls, value: BigRealLike, precision: Optional[int] = None) -> "BigReal":
        if isinstance(value, BigReal):
            return value
        if isinstance(value, (int, Rational)):
            return cls.from_fraction(value, precision)
        raise InvalidParam(f"cannot interpret {type(value).__name__} as BigReal")

    @classmethod
    def from_endpoints(
        cls, lo: Fraction, hi: Fraction, precision: Optional[int] = None
    ) -> "BigReal":
        """Enclosure with the given exact endpoints; no rounding on entry.

        The mpmath form is synthesized only when an interval operation
        needs it, so endpoint-only uses (comparisons, mass accounting)
        never pay for it. Synthesis rounds outward, which can widen the
        working interval for non-dyadic endpoints; the stored endpoints
        stay exact either way.
        """
        if lo > hi:
            raise InvalidParam("interval endpoints out of order")
        bits = precision if precision is not None else default_precision_bits()
        out = cls.__new__(cls)
        out._iv = None
        out.precision = bits
        out._lo = lo
        out._hi = hi
        return out

    def _interval(self):
        if self._iv is None:
            with _prec(self.precision):
                a = _iv_from_fraction(self._lo)
                b = _iv_from_fraction(self._hi)
                self._iv = iv.mpf([a.a, b.b])
        return self._iv

    # -- exact endpoints ----------------------------------------------

    @property
    def lower(self) -> Fraction:
        if self._lo is None:
            self._lo = _fraction_from_mpf(self._iv._mpi_[0])
        return self._lo

    @property
    def upper(self) -> Fraction:
        if self._hi is None:
            self._hi = _fraction_from_mpf(self._iv._mpi_[1])
        return self._hi

    @property
    def value(self) -> Fraction:
        """Midpoint of the enclosure, as an exact rational."""
        return (self.lower + self.upper) / 2

    @property
    def error(self) -> Fraction:
        """Half-width of the enclosure: |true value - value| <= error."""
        return (self.upper - self.lower) / 2

    # -- arithmetic ----------------------------------------------------

    def _binary(self, other: BigRealLike, op) -> "BigReal":
        if isinstance(other, BigReal):
            bits = max(self.precision, other.precision)
            rhs = other._interval()
        elif isinstance(other, (int, Rational)):
            bits = self.precision
            with _prec(bits):
                rhs = _iv_from_fraction(Fraction(other))
        else:
            return NotImplemented
        with _prec(bits):
            return BigReal(op(self._interval(), rhs), bits)

    def __add__(self, other: BigRealLike) -> "BigReal":
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other: BigRealLike) -> "BigReal":
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other: BigRealLike) -> "BigReal":
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other: BigRealLike) -> "BigReal":
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other: BigRealLike) -> "BigReal":
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other: BigRealLike) -> "BigReal":
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other: BigRealLike) -> "BigReal":
        divisor = BigReal.coerce(other, self.precision)
        if divisor.sign() is None:
            raise PrecisionError("division by an interval whose sign is undecided")
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other: BigRealLike) -> "BigReal":
        if self.sign() is None:
            raise PrecisionError("division by an interval whose sign is undecided")
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self) -> "BigReal":
        with _prec(self.precision):
            return BigReal(-self._interval(), self.precision)

    def __abs__(self) -> "BigReal":
        s = self.sign()
        if s is not None:
            return -self if s < 0 else self
        lo, hi = self.lower, self.upper
        return BigReal.from_fraction(max(-lo, hi), self.precision).hull(
            BigReal.from_fraction(Fraction(0), self.precision)
        )

    def __pow__(self, exponent: int) -> "BigReal":
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return 1 / (self ** (-exponent))
        with _prec(self.precision):
            return BigReal(self._interval() ** exponent, self.precision)

    def hull(self, other: "BigReal") -> "BigReal":
        """Smallest interval containing both enclosures."""
        bits = max(self.precision, other.precision)
        lo = min(self.lower, other.lower)
        hi = max(self.upper, other.upper)
        return BigReal.interval(lo, hi, bits)

    @classmethod
    def interval(cls, lo: RationalLike, hi: RationalLike, precision: Optional[int] = None) -> "BigReal":
        bits = precision if precision is not None else default_precision_bits()
        lo_f, hi_f = Fraction(lo), Fraction(hi)
        if lo_f > hi_f:
            raise InvalidParam("interval endpoints out of order")
        with _prec(bits):
            a = _iv_from_fraction(lo_f)
            b = _iv_from_fraction(hi_f)
            return cls(iv.mpf([a.a, b.b]), bits)

    # -- transcendental ------------------------------------------------

    def exp(self) -> "BigReal":
        with _prec(self.precision):
            return BigReal(iv.exp(self._interval()), self.precision)

    def log(self) -> "BigReal":
        if self.lower <= 0:
            if self.upper <= 0:
                raise InvalidParam("log of a non-positive value")
            raise PrecisionError("log argument cannot be certified positive")
        with _prec(self.precision):
            return BigReal(iv.log(self._interval()), self.precision)

    def sqrt(self) -> "BigReal":
        if self.upper < 0:
            raise InvalidParam("sqrt of a negative value")
        if self.lower < 0:
            # Enclosure dips below zero only by rounding slop; clamp it.
            clamped = BigReal.interval(Fraction(0), self.upper, self.precision)
            return clamped.sqrt()
        with _prec(self.precision):
            return BigReal(iv.sqrt(self._interval()), self.precision)

    def pow_frac(self, exponent: RationalLike) -> "BigReal":
        """self ** exponent for rational exponent; requires self > 0."""
        q = Fraction(exponent)
        if q.denominator == 1:
            return self ** q.numerator
        return (self.log() * q).exp()

    # -- comparisons ---------------------------------------------------

    def _endpoints_of(self, other: BigRealLike) -> tuple[Fraction, Fraction]:
        if isinstance(other, BigReal):
            return other.lower, other.upper
        frac = Fraction(other)
        return frac, frac

    def le(self, other: BigRealLike) -> Optional[bool]:
        """True/False when decidable from the enclosures, else None."""
        lo, hi = self._endpoints_of(other)
        if self.upper <= lo:
            return True
        if self.lower > hi:
            return False
        return None

    def lt(self, other: BigRealLike) -> Optional[bool]:
        lo, hi = self._endpoints_of(other)
        if self.upper < lo:
            return True
        if self.lower >= hi:
            return False
        return None

    def ge(self, other: BigRealLike) -> Optional[bool]:
        lo, hi = self._endpoints_of(other)
        if self.lower >= hi:
            return True
        if self.upper < lo:
            return False
        return None

    def gt(self, other: BigRealLike) -> Optional[bool]:
        lo, hi = self._endpoints_of(other)
        if self.lower > hi:
            return True
        if self.upper <= lo:
            return False
        return None

    def sign(self) -> Optional[int]:
        if self.lower > 0:
            return 1
        if self.upper < 0:
            return -1
        if self.lower == 0 == self.upper:
            return 0
        return None

    def contains(self, value: RationalLike) -> bool:
        frac = Fraction(value)
        return self.lower <= frac <= self.upper

    # -- misc ------------------------------------------------------------

    def __float__(self) -> float:
        return float(_mp_from_fraction(self.value))

    def approx_str(self, digits: int = 12) -> str:
        return mp.nstr(_mp_from_fraction(self.value), digits)

    def __repr__(self) -> str:
        err = mp.nstr(_mp_from_fraction(self.error), 3)
        return f"BigReal({self.approx_str()} +/- {err})"

    @classmethod
    def sum(cls, terms: Iterable["BigReal"], precision: Optional[int] = None) -> "BigReal":
        bits = precision if precision is not None else default_precision_bits()
        with _prec(bits):
            total = iv.mpf(0)
            for term in terms:
                bits = max(bits, term.precision)
                total = total + term._interval()
            return cls(total, bits)


def certify(outcome: Optional[bool], question: str) -> bool:
    """Turn a three-valued comparison into a definite answer or an error."""
    if outcome is None:
        raise PrecisionError(f"undecided at working precision: {question}")
    return outcome


def with_refinement(
    compute: Callable[[int], "BigReal"],
    decide: Callable[["BigReal"], Optional[bool]],
    *,
    start_bits: Optional[int] = None,
    max_bits: int = MAX_PRECISION_BITS,
    question: str = "comparison",
) -> bool:
    """Recompute at doubling precision until `decide` settles.

    `compute` must evaluate the same mathematical quantity at the given
    precision; `decide` inspects the enclosure and returns None while the
    interval is still too wide.
    """
    bits = start_bits if start_bits is not None else default_precision_bits()
    while True:
        outcome = decide(compute(bits))
        if outcome is not None:
            return outcome
        if bits >= max_bits:
            raise PrecisionError(f"undecided at {bits} bits: {question}")
        bits = min(2 * bits, max_bits)
