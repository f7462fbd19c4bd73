"""Differential-privacy calculus: budgets, mechanisms, and conversions.

Two systems are supported.  Under ``DpSystem.PURE`` a mechanism claims a
bound epsilon on the worst-case log likelihood ratio between neighbouring
databases; under ``DpSystem.ZCDP`` it claims a bound rho such that every
Renyi divergence of order alpha stays below alpha*rho.  Budgets are exact
rationals end to end; only the conversions to and from approximate DP
leave the rationals, and those return certified enclosures.

Databases are finite tuples of hashable records.  Two databases are
neighbours when one is obtained from the other by adding, removing, or
modifying a single entry.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Iterator, Optional, Sequence, Tuple, Union

from .bigreal import BigReal
from .entropy import EntropySource
from .errors import EnumerationTooLarge, InvalidParam, SystemMismatch
from .exactdist import (
    MassFunction,
    gaussian_mass_function,
    laplace_mass_function,
    mass_mul,
    mass_upper,
)
from .samplers import RationalParam, gaussian, laplace

Database = Tuple[Any, ...]

# Inverse granularity for rounding irrational budget solutions down to an
# exact rational.  2^-64 is far below every tolerance used by the audits.
_BUDGET_GRAIN = 1 << 64


class DpSystem(Enum):
    """Which privacy accounting discipline a mechanism's claim lives in."""

    PURE = "pure"
    ZCDP = "zcdp"


@dataclass(frozen=True)
class Budget:
    """Exact nonnegative rational privacy budget (epsilon or rho)."""

    value: Fraction

    def __post_init__(self):
        value = self.value
        if isinstance(value, float):
            raise InvalidParam("budgets are exact rationals, not floats")
        if not isinstance(value, Rational):
            raise InvalidParam(f"not a rational budget: {value!r}")
        value = Fraction(value)
        if value < 0:
            raise InvalidParam(f"budget must be nonnegative, got {value}")
        object.__setattr__(self, "value", value)

    @classmethod
    def parse(cls, text: str) -> "Budget":
        num, _, den = text.partition("/")
        try:
            value = Fraction(int(num), int(den)) if den else Fraction(int(num))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParam(f"cannot parse budget {text!r}") from exc
        return cls(value)

    def __add__(self, other: "Budget") -> "Budget":
        if not isinstance(other, Budget):
            return NotImplemented
        return Budget(self.value + other.value)

    def __le__(self, other: "Budget") -> bool:
        return self.value <= other.value

    def __lt__(self, other: "Budget") -> bool:
        return self.value < other.value

    def __str__(self) -> str:
        return f"{self.value.numerator}/{self.value.denominator}"


ZERO_BUDGET = Budget(Fraction(0))


@dataclass(frozen=True)
class Query:
    """Deterministic integer query with a declared sensitivity bound."""

    evaluate: Callable[[Database], int]
    sensitivity: int
    name: str = "query"

    def __post_init__(self):
        if not isinstance(self.sensitivity, int) or self.sensitivity < 1:
            raise InvalidParam("declared sensitivity must be a positive integer")


@dataclass(frozen=True)
class NoiseShape:
    """Analytic form of an additive-noise output distribution.

    Rényi audits need a sound bound on the off-window part of the
    divergence sum, which only analytic knowledge of the noise family can
    supply; mechanisms built by `noise` carry their family, scale, and
    center map here.
    """

    kind: str  # "laplace" or "gaussian"
    scale: Fraction
    center: Callable[[Database], int]


@dataclass(frozen=True)
class Mechanism:
    """A randomized query together with its claimed privacy budget.

    ``run`` draws one output on a concrete database.  ``exact_builder``,
    when present, returns the exact output distribution for a database so
    the audit harness can enumerate it; the returned MassFunction must
    normalize.  ``dist_key`` maps a database to a hashable fingerprint
    under which the output distribution is constant; builders memoize on
    it, so equal fingerprints return the identical MassFunction object.

    ``system`` may be None for database-independent mechanisms (const),
    which compose with either system.
    """

    run: Callable[[Database, EntropySource], Any]
    system: Optional[DpSystem]
    claimed: Budget
    exact_builder: Optional[Callable[[Database], MassFunction]] = None
    dist_key: Optional[Callable[[Database], Any]] = None
    noise_shape: Optional[NoiseShape] = None
    label: str = "mechanism"


def _memoized(build: Callable[[Database], MassFunction],
              key_of: Callable[[Database], Any]) -> Callable[[Database], MassFunction]:
    cache: dict = {}
    def builder(db: Database) -> MassFunction:
        key = key_of(db)
        got = cache.get(key)
        if got is None:
            got = cache[key] = build(db)
        return got
    return builder


# -- neighbour enumeration ---------------------------------------------------


def databases(universe: Sequence[Any], maxlen: int) -> Iterator[Database]:
    """All record tuples over `universe` of length 0..maxlen."""
    for n in range(maxlen + 1):
        yield from itertools.product(universe, repeat=n)


def neighbouring_pairs(
    universe: Sequence[Any], maxlen: int, pair_cap: int = 10_000
) -> Iterator[Tuple[Database, Database]]:
    """Each unordered neighbouring pair over the universe, exactly once.

    Additions are enumerated from the shorter side (so removals are their
    mirrors) and modifications once per position with the replacement
    ordered above the original.  Records must be orderable for the latter.
    Raises EnumerationTooLarge past `pair_cap` pairs.
    """
    count = 0
    for db in databases(universe, maxlen):
        n = len(db)
        here = []
        if n < maxlen:
            for i in range(n + 1):
                for r in universe:
                    here.append(db[:i] + (r,) + db[i:])
        for i in range(n):
            for r in universe:
                if r > db[i]:
                    here.append(db[:i] + (r,) + db[i + 1 :])
        # Different insertion points can produce the same neighbour.
        here = list(dict.fromkeys(here))
        count += len(here)
        if count > pair_cap:
            raise EnumerationTooLarge(
                f"more than {pair_cap} neighbouring pairs over "
                f"universe size {len(universe)}, maxlen {maxlen}"
            )
        for other in here:
            yield db, other


@dataclass(frozen=True)
class SensitivityReport:
    """Outcome of exhaustive sensitivity enumeration."""

    ok: bool
    max_delta: int
    witness: Optional[Tuple[Database, Database]]

    def __bool__(self) -> bool:
        return self.ok


def sensitivity_check(
    query: Query,
    delta: int,
    universe: Sequence[Any],
    maxlen: int,
    pair_cap: int = 10_000,
) -> SensitivityReport:
    """Check |q(l) - q(l')| <= delta over every neighbouring pair.

    Exhaustive over databases of length <= maxlen with records drawn from
    `universe`; the report carries the worst pair found (a violating pair
    whenever the check fails).
    """
    if delta < 0:
        raise InvalidParam("sensitivity bound must be nonnegative")
    worst = 0
    witness: Optional[Tuple[Database, Database]] = None
    for db, other in neighbouring_pairs(universe, maxlen, pair_cap):
        gap = abs(query.evaluate(db) - query.evaluate(other))
        if gap > worst:
            worst = gap
            witness = (db, other)
            if gap > delta:
                break
    return SensitivityReport(ok=worst <= delta, max_delta=worst, witness=witness)


# -- the calculus ------------------------------------------------------------


def noise(
    query: Query,
    delta: Optional[int] = None,
    gamma_num: int = 1,
    gamma_den: int = 1,
    sys: DpSystem = DpSystem.PURE,
    *,
    halfwidth: Optional[int] = None,
    precision: Optional[int] = None,
) -> Mechanism:
    """Additive noise calibrated to sensitivity `delta` and pair (γn, γd).

    Pure: discrete Laplace with scale (delta*γd)/γn, claiming
    epsilon = γn/γd.  ZCDP: discrete Gaussian with sigma = (delta*γd)/γn,
    claiming rho = (γn/γd)^2 / 2 (the tight delta^2/(2 sigma^2) rule).
    The sensitivity bound is the caller's responsibility; validate it with
    sensitivity_check on a test universe.

    `halfwidth`/`precision` only affect the exact_builder's window and
    interval precision, never the sampling path.
    """
    if delta is None:
        delta = query.sensitivity
    if not isinstance(delta, int) or delta < 1:
        raise InvalidParam("sensitivity must be a positive integer")
    if not isinstance(gamma_num, int) or gamma_num < 1:
        raise InvalidParam("budget numerator must be a positive integer")
    if not isinstance(gamma_den, int) or gamma_den < 1:
        raise InvalidParam("budget denominator must be a positive integer")

    scale = RationalParam(delta * gamma_den, gamma_num)
    ratio = Fraction(gamma_num, gamma_den)
    if sys is DpSystem.PURE:
        claimed = Budget(ratio)

        def run(db: Database, src: EntropySource) -> int:
            return query.evaluate(db) + laplace(src, scale)

        def centered() -> MassFunction:
            return laplace_mass_function(
                scale.value, halfwidth=halfwidth, precision=precision
            )

    elif sys is DpSystem.ZCDP:
        claimed = Budget(ratio * ratio / 2)

        def run(db: Database, src: EntropySource) -> int:
            return query.evaluate(db) + gaussian(src, scale)

        def centered() -> MassFunction:
            return gaussian_mass_function(
                scale.value, halfwidth=halfwidth, precision=precision
            )

    else:
        raise InvalidParam(f"unknown system {sys!r}")

    base = {"mf": None}

    def build(db: Database) -> MassFunction:
        if base["mf"] is None:
            base["mf"] = centered()
        return base["mf"].translate(query.evaluate(db))

    return Mechanism(
        run=run,
        system=sys,
        claimed=claimed,
        exact_builder=_memoized(build, query.evaluate),
        dist_key=query.evaluate,
        noise_shape=NoiseShape(
            kind="laplace" if sys is DpSystem.PURE else "gaussian",
            scale=scale.value,
            center=query.evaluate,
        ),
        label=f"noise[{query.name}, {scale}, {sys.value}]",
    )


def _join_systems(a: Optional[DpSystem], b: Optional[DpSystem]) -> Optional[DpSystem]:
    if a is None:
        return b
    if b is None:
        return a
    if a is not b:
        raise SystemMismatch(f"cannot mix {a.value} and {b.value} claims")
    return a


Continuation = Callable[[Any], Mechanism]


def compose(
    first: Mechanism,
    second: Union[Mechanism, Continuation],
    *,
    continuation_budget: Optional[Budget] = None,
    label: Optional[str] = None,
) -> Mechanism:
    """Sequential composition; output is the pair of component outputs.

    `second` is either a Mechanism or an adaptive continuation mapping the
    first output to one.  Adaptive composition needs an explicit
    `continuation_budget` covering every continuation's claim, since the
    claim must be fixed before the first output is seen.  The composed
    claim is the exact rational sum.
    """
    static = isinstance(second, Mechanism)
    if static:
        if continuation_budget is not None:
            raise InvalidParam("continuation budget only applies to adaptive form")
        system = _join_systems(first.system, second.system)
        tail_claim = second.claimed
    else:
        if continuation_budget is None:
            raise InvalidParam("adaptive composition needs a continuation budget")
        system = first.system
        tail_claim = continuation_budget

    def check_continuation(m: Mechanism) -> Mechanism:
        _join_systems(first.system, m.system)
        if not m.claimed <= tail_claim:
            raise InvalidParam(
                f"continuation claims {m.claimed}, beyond budget {tail_claim}"
            )
        return m

    def run(db: Database, src: EntropySource):
        a = first.run(db, src)
        follow = second if static else check_continuation(second(a))
        return a, follow.run(db, src)

    builder = None
    key_of = None
    if first.exact_builder is not None:
        if static and second.exact_builder is not None:

            def build(db: Database) -> MassFunction:
                return _bind(first.exact_builder(db), lambda _t: second.exact_builder(db))

            if first.dist_key is not None and second.dist_key is not None:
                key_of = lambda db: (first.dist_key(db), second.dist_key(db))
        elif not static:

            def build(db: Database) -> MassFunction:
                def sub(t):
                    follow = check_continuation(second(t))
                    if follow.exact_builder is None:
                        raise InvalidParam("continuation lacks an exact builder")
                    return follow.exact_builder(db)

                return _bind(first.exact_builder(db), sub)

        else:
            build = None
        if build is not None:
            builder = _memoized(build, key_of) if key_of else build

    return Mechanism(
        run=run,
        system=system,
        claimed=first.claimed + tail_claim,
        exact_builder=builder,
        dist_key=key_of,
        label=label or f"compose[{first.label}, "
        f"{second.label if static else 'adaptive'}]",
    )


def _bind(base: MassFunction, sub_of: Callable[[Any], MassFunction]) -> MassFunction:
    """Exact distribution of the pair (t, v) with v drawn from sub_of(t)."""
    masses: dict = {}
    tail = base.tail_upper()
    precision = base.precision
    for t, p_t in base.masses.items():
        sub = sub_of(t)
        tail += mass_upper(p_t) * sub.tail_upper()
        if sub.precision is not None:
            precision = max(precision or 0, sub.precision)
        for v, q_v in sub.masses.items():
            masses[(t, v)] = mass_mul(p_t, q_v)
    return MassFunction(masses, tail_bound=tail, precision=precision)


def postprocess(m: Mechanism, fn: Callable[[Any], Any],
                label: Optional[str] = None) -> Mechanism:
    """Apply a database-independent function to the output; claim unchanged."""
    builder = None
    if m.exact_builder is not None:
        def build(db: Database) -> MassFunction:
            return m.exact_builder(db).map_points(fn)

        builder = _memoized(build, m.dist_key) if m.dist_key else build
    return Mechanism(
        run=lambda db, src: fn(m.run(db, src)),
        system=m.system,
        claimed=m.claimed,
        exact_builder=builder,
        dist_key=m.dist_key,
        label=label or f"postprocess[{m.label}]",
    )


def const(value: Any, system: Optional[DpSystem] = None) -> Mechanism:
    """Point mass at `value` for every database; claims budget 0."""
    mf = MassFunction({value: Fraction(1)})
    return Mechanism(
        run=lambda db, src: value,
        system=system,
        claimed=ZERO_BUDGET,
        exact_builder=lambda db: mf,
        dist_key=lambda db: (),
        label=f"const[{value!r}]",
    )


# -- approximate-DP conversions ----------------------------------------------


def _as_unit_fraction(delta) -> Fraction:
    if isinstance(delta, float):
        delta = Fraction(delta)
    if not isinstance(delta, Rational):
        raise InvalidParam(f"delta must be rational, got {delta!r}")
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise InvalidParam(f"delta must lie in (0, 1), got {delta}")
    return delta


def approx_dp_of(sys: DpSystem, budget: Budget, delta,
                 precision: Optional[int] = None) -> BigReal:
    """Approximate-DP epsilon implied by `budget` at failure rate delta.

    Pure claims convert unchanged; a zCDP claim rho yields
    rho + sqrt(4 rho ln(1/delta)).
    """
    delta = _as_unit_fraction(delta)
    gamma = budget.value
    if sys is DpSystem.PURE:
        return BigReal.from_fraction(gamma, precision)
    if sys is not DpSystem.ZCDP:
        raise InvalidParam(f"unknown system {sys!r}")
    if gamma == 0:
        return BigReal.from_fraction(Fraction(0), precision)
    log_inv = -BigReal.from_fraction(delta, precision).log()
    rho = BigReal.from_fraction(gamma, precision)
    return rho + (rho * log_inv * 4).sqrt()


def of_app_dp(sys: DpSystem, delta, eps_prime) -> Budget:
    """Largest budget whose approx_dp_of stays at or below eps_prime.

    The zCDP solution (sqrt(ln(1/delta) + eps') - sqrt(ln(1/delta)))^2 is
    irrational, so the result is its certified lower enclosure rounded
    down to a multiple of 2^-64; the round trip through approx_dp_of then
    lands at or below eps_prime by monotonicity.
    """
    delta = _as_unit_fraction(delta)
    if isinstance(eps_prime, float):
        eps_prime = Fraction(eps_prime)
    if not isinstance(eps_prime, Rational):
        raise InvalidParam(f"eps_prime must be rational, got {eps_prime!r}")
    eps_prime = Fraction(eps_prime)
    if eps_prime <= 0:
        raise InvalidParam(f"eps_prime must be positive, got {eps_prime}")
    if sys is DpSystem.PURE:
        return Budget(eps_prime)
    if sys is not DpSystem.ZCDP:
        raise InvalidParam(f"unknown system {sys!r}")
    log_inv = -BigReal.from_fraction(delta).log()
    root = (log_inv + eps_prime).sqrt() - log_inv.sqrt()
    rho = root * root
    floor = rho.lower * _BUDGET_GRAIN
    scaled = floor.numerator // floor.denominator
    return Budget(Fraction(max(scaled, 0), _BUDGET_GRAIN))


def pure_to_zcdp(eps: Budget) -> Budget:
    """Convert a pure-DP claim epsilon into the zCDP claim epsilon^2/2."""
    return Budget(eps.value * eps.value / 2)
