"""Concrete private queries assembled from the calculus in `privacy`.

Everything here is built by composing `noise`, `compose`, `postprocess`,
and `const`, so each mechanism's claimed budget is an exact rational sum
over its noise constituents and each carries an exact_builder whenever its
components do.  Outputs stay integer-valued (or tuples thereof); any
division is left to the consumer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence, Tuple

from .entropy import EntropySource
from .errors import InvalidParam
from .exactdist import MassFunction, laplace_cdf, laplace_mass_function, mass_mul
from .privacy import (
    Budget,
    Database,
    DpSystem,
    Mechanism,
    Query,
    _memoized,
    compose,
    noise,
    postprocess,
    sensitivity_check,
)
from .samplers import RationalParam, laplace


@dataclass(frozen=True)
class Bins:
    """A total assignment of records to bin indices 0..n_bins-1."""

    n_bins: int
    assign: Callable[[Any], int]

    def __post_init__(self):
        if not isinstance(self.n_bins, int) or self.n_bins < 1:
            raise InvalidParam("n_bins must be a positive integer")


@dataclass(frozen=True)
class HistogramResult:
    """Noised per-bin counts; entries may be negative."""

    counts: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.counts)

    def __getitem__(self, index: int) -> int:
        return self.counts[index]

    def __iter__(self):
        return iter(self.counts)


def exact_bin_count(bins: Bins, b: int) -> Query:
    """Number of records assigned to bin b; sensitivity 1."""
    if not 0 <= b < bins.n_bins:
        raise InvalidParam(f"bin index {b} outside [0, {bins.n_bins})")
    return Query(
        evaluate=lambda db: sum(1 for r in db if bins.assign(r) == b),
        sensitivity=1,
        name=f"bin_count[{b}]",
    )


def noised_bin_count(
    bins: Bins,
    b: int,
    gamma_num: int,
    gamma_den: int,
    sys: DpSystem = DpSystem.PURE,
    **noise_kw,
) -> Mechanism:
    """One noised bin count at parameter pair (γn, γd·nBins).

    Spending only an nBins-th of the (γn, γd) budget per bin makes the
    full histogram come out at the whole budget: in the pure system the
    per-bin claim is exactly (γn/γd)/nBins.
    """
    return noise(
        exact_bin_count(bins, b), 1, gamma_num, gamma_den * bins.n_bins, sys,
        **noise_kw,
    )


def noised_histogram(
    bins: Bins,
    gamma_num: int,
    gamma_den: int,
    sys: DpSystem = DpSystem.PURE,
    **noise_kw,
) -> Mechanism:
    """All bin counts, one noised count per bin, composed recursively.

    Built exactly as the recursion reads: the mechanism for bins 0..b is
    the composition of the one for bins 0..b-1 with bin b's noised count,
    postprocessed to append the new count.  The claim is the exact sum of
    the per-bin claims.
    """

    def level(b: int) -> Mechanism:
        count = noised_bin_count(bins, b, gamma_num, gamma_den, sys, **noise_kw)
        if b == 0:
            return postprocess(count, lambda c: (c,))
        prev = level(b - 1)
        return postprocess(compose(prev, count), lambda pair: pair[0] + (pair[1],))

    return postprocess(
        level(bins.n_bins - 1),
        HistogramResult,
        label=f"histogram[{bins.n_bins} bins, {sys.value}]",
    )


def per_bin_scale(bins: Bins, gamma_num: int, gamma_den: int) -> Fraction:
    """Noise scale each bin count receives under (γn, γd)."""
    return Fraction(gamma_den * bins.n_bins, gamma_num)


def approx_max(
    bins: Bins,
    tau: Optional[int] = None,
    gamma_num: int = 1,
    gamma_den: int = 1,
    sys: DpSystem = DpSystem.PURE,
    **noise_kw,
) -> Mechanism:
    """Largest bin index whose noised count exceeds tau; 0 if none.

    Pure postprocessing of the noised histogram, so the claim is the
    histogram's.  The default tau of ceil(3 * per-bin noise scale) makes
    a spurious pick from any single empty bin a < 5% event.
    """
    if tau is None:
        tau = math.ceil(3 * per_bin_scale(bins, gamma_num, gamma_den))
    top = bins.n_bins - 1

    def pick(hist: HistogramResult) -> int:
        for b in range(top, -1, -1):
            if hist[b] > tau:
                return b
        return 0

    hist = noised_histogram(bins, gamma_num, gamma_den, sys, **noise_kw)
    return postprocess(hist, pick, label=f"approx_max[tau={tau}, {sys.value}]")


def clipped(value: int, bound: int) -> int:
    return min(max(value, 0), bound)


def noised_mean(
    bound: int,
    gamma_num: int,
    gamma_den: int,
    sys: DpSystem = DpSystem.PURE,
    **noise_kw,
) -> Mechanism:
    """Noised (clipped sum, count) pair; division is the consumer's.

    Records are clipped to [0, bound], giving the sum sensitivity exactly
    `bound`.  The parameter pair is split evenly between the two noised
    queries by doubling the denominator, so in the pure system each half
    claims (γn/γd)/2 and the composition claims γn/γd.
    """
    if not isinstance(bound, int) or bound < 1:
        raise InvalidParam("clip bound must be a positive integer")
    sum_query = Query(
        evaluate=lambda db: sum(clipped(r, bound) for r in db),
        sensitivity=bound,
        name=f"clipped_sum[0,{bound}]",
    )
    count_query = Query(lambda db: len(db), 1, "count")
    half_den = 2 * gamma_den
    noised_sum = noise(sum_query, bound, gamma_num, half_den, sys, **noise_kw)
    noised_count = noise(count_query, 1, gamma_num, half_den, sys, **noise_kw)
    return compose(
        noised_sum, noised_count, label=f"mean[clip {bound}, {sys.value}]"
    )


def sparse_vector(
    queries: Sequence[Query],
    threshold: int,
    epsilon: RationalParam,
    *,
    validate_universe: Optional[Sequence[Any]] = None,
    validate_maxlen: int = 3,
    halfwidth: Optional[int] = None,
    precision: Optional[int] = None,
) -> Mechanism:
    """Index of the first query whose noised value clears a noised
    threshold, or None; the classical above-threshold scheme.

    The threshold gets discrete Laplace noise at scale 2/eps and each
    query value at scale 4/eps; only the first crossing is released, so
    the whole sequence claims eps under pure DP however long it is.  Every
    query must have sensitivity 1: declared, and checked exhaustively when
    `validate_universe` is given.
    """
    queries = list(queries)
    for q in queries:
        if q.sensitivity != 1:
            raise InvalidParam(f"{q.name} declares sensitivity {q.sensitivity}, need 1")
        if validate_universe is not None:
            report = sensitivity_check(q, 1, validate_universe, validate_maxlen)
            if not report.ok:
                raise InvalidParam(
                    f"{q.name} violates sensitivity 1 at {report.witness}"
                )
    if epsilon.num < 1:
        raise InvalidParam("epsilon must be positive")
    threshold_scale = RationalParam(2 * epsilon.den, epsilon.num)
    query_scale = RationalParam(4 * epsilon.den, epsilon.num)

    def run(db: Database, src: EntropySource) -> Optional[int]:
        noised_threshold = threshold + laplace(src, threshold_scale)
        for index, q in enumerate(queries):
            if q.evaluate(db) + laplace(src, query_scale) >= noised_threshold:
                return index
        return None

    def build(db: Database) -> MassFunction:
        # Integrate the query noises exactly (closed-form CDFs); only the
        # threshold-noise window is truncated, so its tail is the whole
        # tail bound.
        threshold_noise = laplace_mass_function(
            threshold_scale.value,
            halfwidth=halfwidth,
            center=threshold,
            precision=precision,
        )
        values = [q.evaluate(db) for q in queries]
        masses: dict = {}
        for noised_threshold, weight in threshold_noise.masses.items():
            stop = weight  # running mass of "all earlier queries stayed below"
            for index, value in enumerate(values):
                below = laplace_cdf(
                    query_scale.value, noised_threshold - value - 1, precision
                )
                crossed = mass_mul(stop, 1 - below)
                masses[index] = masses[index] + crossed if index in masses else crossed
                stop = mass_mul(stop, below)
            masses[None] = masses[None] + stop if None in masses else stop
        return MassFunction(
            masses,
            tail_bound=threshold_noise.tail_upper(),
            precision=threshold_noise.precision,
        )

    def key_of(db: Database) -> Tuple[int, ...]:
        return tuple(q.evaluate(db) for q in queries)

    return Mechanism(
        run=run,
        system=DpSystem.PURE,
        claimed=Budget(epsilon.value),
        exact_builder=_memoized(build, key_of),
        dist_key=key_of,
        label=f"sparse_vector[{len(queries)} queries, T={threshold}, eps={epsilon}]",
    )
