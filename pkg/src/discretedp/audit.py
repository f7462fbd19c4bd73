"""Verification harness: statistical sampler audits and exact DP audits.

Statistical checks (goodness of fit, two-sample homogeneity) compare
frequency tables against oracle mass functions with chi-squared p-values
computed in interval arithmetic.  Exact checks (pointwise DP ratio, Renyi
divergence, cut stability) enumerate tiny universes through mechanisms'
exact builders.  Every verdict is sound in one direction: a report passes
only when the statistic is certified at or below its threshold with all
tail and precision slack charged against the pass.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bigreal import BigReal, default_precision_bits
from .entropy import SeededSource
from .errors import DegenerateCells, InvalidParam, SupportMismatch
from .exactdist import (
    LoopSpec,
    MassFunction,
    chi2_sf,
    gaussian_cross_tail,
    laplace_cross_tail,
    loop_unroll,
    mass_lower,
    mass_upper,
    renyi_divergence,
)
from .privacy import Budget, Mechanism, neighbouring_pairs

DEFAULT_ALPHA = Fraction(1, 1000)
DEFAULT_SLACK_TOL = Fraction(1, 10**9)
_MIN_EXPECTED = 5  # classical chi-squared cell rule


def _as_fraction(value, what: str) -> Fraction:
    if isinstance(value, Budget):
        return value.value
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value)
    raise InvalidParam(f"{what} must be rational, got {value!r}")


def _json_value(value) -> Any:
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, BigReal):
        return value.approx_str()
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return str(value)


@dataclass(frozen=True)
class AuditReport:
    """Outcome of one audit; `slack` is the tail/precision error charged
    against the pass verdict."""

    test: str
    statistic: Any
    threshold: Any
    slack: Any
    verdict: bool
    witness: Optional[Any] = None
    seed: Optional[int] = None
    draws: Optional[int] = None

    def __bool__(self) -> bool:
        return self.verdict

    def to_json_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": _json_value(self.statistic),
            "threshold": _json_value(self.threshold),
            "slack": _json_value(self.slack),
            "verdict": "pass" if self.verdict else "fail",
            "witness": _json_value(self.witness),
            "seed": self.seed,
            "draws": self.draws,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)


# -- empirical frequencies ----------------------------------------------------


def empirical_pmf(sampler, draws: int, seed: int) -> MassFunction:
    """Exact frequency table of `draws` samples from a fresh seeded source."""
    if draws < 1:
        raise InvalidParam("need at least one draw")
    src = SeededSource(seed)
    if hasattr(sampler, "sample_many"):
        samples = np.asarray(sampler.sample_many(src, draws))
    else:
        samples = np.fromiter(
            (sampler(src) for _ in range(draws)), dtype=np.int64, count=draws
        )
    values, counts = np.unique(samples, return_counts=True)
    masses = {int(v): Fraction(int(c), draws) for v, c in zip(values, counts)}
    return MassFunction(masses, tail_bound=Fraction(0), draws=draws)


def _counts_of(empirical: MassFunction) -> Tuple[int, Dict[int, int]]:
    draws = empirical.draws
    if draws is None:
        raise InvalidParam("empirical mass function must carry its draw count")
    counts = {}
    for z, m in empirical.masses.items():
        c = mass_lower(m) * draws
        if c.denominator != 1:
            raise InvalidParam(f"mass at {z!r} is not a multiple of 1/draws")
        counts[int(z)] = c.numerator
    return draws, counts


# -- chi-squared machinery -----------------------------------------------------


@functools.lru_cache(maxsize=64)
def _critical_value(df: int, alpha: Fraction, bits: int) -> Fraction:
    """Upper bound on the chi-squared critical value at tail mass alpha."""
    alpha = Fraction(alpha)
    hi = Fraction(max(4 * df, 8))
    while chi2_sf(hi, df, bits).lt(alpha) is not True:
        hi *= 2
        if hi > 1 << 24:
            raise InvalidParam("critical value bracket failed to close")
    lo = Fraction(0)
    for _ in range(64):
        mid = (lo + hi) / 2
        p = chi2_sf(mid, df, bits)
        if p.ge(alpha) is True:
            lo = mid
        elif p.lt(alpha) is True:
            hi = mid
        else:
            break  # alpha inside p's enclosure; the bracket is already tight
    return hi


def _p_value_verdict(
    statistic: BigReal, df: int, alpha: Fraction
) -> Tuple[BigReal, bool]:
    """P-value enclosure and the certified `p >= alpha` verdict."""
    bits = statistic.precision
    for attempt in range(3):
        p = chi2_sf(statistic, df, bits << attempt)
        if p.ge(alpha) is True:
            return p, True
        if p.lt(alpha) is True:
            return p, False
    # Could not separate p from alpha: fail on the sound side.
    return p, False


def _merge_cells(
    entries: Sequence[Tuple[Any, int, Fraction, Fraction]],
) -> List[Tuple[List[Any], int, Fraction, Fraction]]:
    """Group consecutive entries until each expected count reaches 5.

    Entries are (point, observed, expected_lo, expected_hi); a trailing
    short group is merged into the previous cell.
    """
    cells: List[Tuple[List[Any], int, Fraction, Fraction]] = []
    points: List[Any] = []
    obs, exp_lo, exp_hi = 0, Fraction(0), Fraction(0)
    for point, o, lo, hi in entries:
        points.append(point)
        obs += o
        exp_lo += lo
        exp_hi += hi
        if exp_lo >= _MIN_EXPECTED:
            cells.append((points, obs, exp_lo, exp_hi))
            points, obs, exp_lo, exp_hi = [], 0, Fraction(0), Fraction(0)
    if points:
        if not cells:
            raise DegenerateCells("no cell reaches the minimum expected count")
        last_points, last_obs, last_lo, last_hi = cells[-1]
        cells[-1] = (last_points + points, last_obs + obs, last_lo + exp_lo,
                     last_hi + exp_hi)
    if len(cells) < 2:
        raise DegenerateCells(f"{len(cells)} cell(s) after merging, need >= 2")
    return cells


def _chi2_term(observed: int, exp_lo: Fraction, exp_hi: Fraction) -> Tuple[Fraction, Fraction]:
    """Exact range of (O - E)^2 / E over E in [exp_lo, exp_hi].

    The map is decreasing below E = O and increasing above, so the minimum
    sits at the clamped observation and the maximum at an endpoint.
    """
    if exp_lo <= 0:
        raise InvalidParam("expected count must be positive")

    def f(e: Fraction) -> Fraction:
        d = observed - e
        return d * d / e

    best = Fraction(observed) if exp_lo <= observed <= exp_hi else None
    lo = Fraction(0) if best is not None else min(f(exp_lo), f(exp_hi))
    hi = max(f(exp_lo), f(exp_hi))
    return lo, hi


def gof_test(
    empirical: MassFunction,
    oracle: MassFunction,
    alpha: Fraction = DEFAULT_ALPHA,
    seed: Optional[int] = None,
) -> AuditReport:
    """Chi-squared goodness of fit of a frequency table against an oracle.

    Cells are consecutive integers of the oracle window, merged until each
    expects at least 5 observations; observations outside the window fold
    into the edge cells, whose expected mass is widened by the oracle's
    tail bound.  Passes iff the certified p-value reaches alpha.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha < 1:
        raise InvalidParam("alpha must lie in (0, 1)")
    draws, counts = _counts_of(empirical)
    lo, hi = oracle.window()
    below = sum(c for z, c in counts.items() if z < lo)
    above = sum(c for z, c in counts.items() if z > hi)
    tail = oracle.tail_upper()
    entries = []
    for z in range(lo, hi + 1):
        m = oracle.mass(z)
        o = counts.get(z, 0)
        e_lo, e_hi = mass_lower(m) * draws, mass_upper(m) * draws
        if z == lo:
            o += below
            e_hi += tail * draws
        if z == hi:
            o += above
            e_hi += tail * draws
        entries.append((z, o, e_lo, e_hi))
    cells = _merge_cells(entries)

    stat_lo, stat_hi = Fraction(0), Fraction(0)
    worst = None
    for points, obs, e_lo, e_hi in cells:
        t_lo, t_hi = _chi2_term(obs, e_lo, e_hi)
        stat_lo += t_lo
        stat_hi += t_hi
        if worst is None or t_hi > worst[0]:
            worst = (t_hi, points[0], points[-1], obs, e_lo)
    bits = oracle.precision or default_precision_bits()
    statistic = BigReal.interval(stat_lo, stat_hi, bits)
    df = len(cells) - 1
    p, ok = _p_value_verdict(statistic, df, alpha)
    threshold = _critical_value(df, alpha, bits)
    witness = {
        "cell": [worst[1], worst[2]],
        "observed": worst[3],
        "expected": float(worst[4]),
        "p_value": p.approx_str(),
        "df": df,
    }
    return AuditReport(
        test="gof",
        statistic=statistic,
        threshold=BigReal.from_fraction(threshold),
        slack=BigReal.from_fraction(stat_hi - stat_lo),
        verdict=ok,
        witness=witness,
        seed=seed,
        draws=draws,
    )


def two_sample_test(
    sampler_a,
    sampler_b,
    draws: int,
    seed: int,
    alpha: Fraction = DEFAULT_ALPHA,
) -> AuditReport:
    """Chi-squared homogeneity test between two samplers' draw sets.

    Both samplers get `draws` samples from independent seeded sources
    (seed and seed+1).  With equal sample sizes the statistic reduces to
    sum (a_c - b_c)^2 / (a_c + b_c) over merged cells, an exact rational.
    """
    if draws < 10**4:
        raise InvalidParam("two-sample test needs at least 10^4 draws per side")
    alpha = Fraction(alpha)
    a = _counts_of(empirical_pmf(sampler_a, draws, seed))[1]
    b = _counts_of(empirical_pmf(sampler_b, draws, seed + 1))[1]
    entries = []
    for z in sorted(set(a) | set(b)):
        az, bz = a.get(z, 0), b.get(z, 0)
        # Expected count per sample under homogeneity is (a+b)/2.
        half = Fraction(az + bz, 2)
        entries.append((z, az + bz, half, half))
    cells = _merge_cells(entries)
    statistic = Fraction(0)
    worst = None
    for points, _, half, _ in cells:
        ac = sum(a.get(z, 0) for z in points)
        bc = sum(b.get(z, 0) for z in points)
        term = Fraction((ac - bc) ** 2, ac + bc)
        statistic += term
        if worst is None or term > worst[0]:
            worst = (term, points[0], points[-1], ac, bc)
    bits = default_precision_bits()
    stat = BigReal.from_fraction(statistic, bits)
    df = len(cells) - 1
    p, ok = _p_value_verdict(stat, df, alpha)
    witness = {
        "cell": [worst[1], worst[2]],
        "counts": [worst[3], worst[4]],
        "p_value": p.approx_str(),
        "df": df,
    }
    return AuditReport(
        test="two-sample",
        statistic=stat,
        threshold=BigReal.from_fraction(_critical_value(df, alpha, bits)),
        slack=Fraction(0),
        verdict=ok,
        witness=witness,
        seed=seed,
        draws=draws,
    )


# -- exact differential-privacy audits ----------------------------------------


def _builder_of(mechanism: Mechanism) -> Callable:
    if mechanism.exact_builder is None:
        raise InvalidParam(f"{mechanism.label} has no exact builder")
    return mechanism.exact_builder


def _scan_ratio(
    p: MassFunction, q: MassFunction, slack_tol: Fraction
) -> Tuple[Fraction, Fraction, Any, Fraction]:
    """Worst-case P(z)/Q(z) over P's support, with unmatched mass folded.

    Returns (certified lower and upper bounds on the max ratio, witness
    point, folded slack).  Points where Q certifies no mass contribute
    their whole P mass to the slack instead of an infinite ratio; past
    `slack_tol` that is a support mismatch, not a tolerance.
    """
    # Hot loop: endpoint access is inlined and the running maxima live as
    # unreduced nonnegative num/den integer pairs, compared by
    # cross-multiplication. One Fraction reduction per point would
    # dominate on product distributions with tens of thousands of points.
    hi_n, hi_d = 0, 1
    lo_n, lo_d = 0, 1
    at = None
    fold = Fraction(0)
    q_masses = q.masses
    for z, pm in p.masses.items():
        if isinstance(pm, BigReal):
            p_lo, p_hi = pm.lower, pm.upper
        else:
            p_lo = p_hi = pm
        if p_hi.numerator == 0:
            continue
        qm = q_masses.get(z)
        if qm is None:
            q_lo = None
        elif isinstance(qm, BigReal):
            q_lo, q_hi = qm.lower, qm.upper
        else:
            q_lo = q_hi = qm
        if q_lo is None or q_lo.numerator == 0:
            fold += p_hi
            if fold > slack_tol:
                raise SupportMismatch(
                    f"mass {float(p_hi):.3g} at {z!r} has no matchable base mass"
                )
            continue
        num = p_hi.numerator * q_lo.denominator
        den = p_hi.denominator * q_lo.numerator
        if num * hi_d > hi_n * den:
            hi_n, hi_d = num, den
            at = z
        num = p_lo.numerator * q_hi.denominator
        den = p_lo.denominator * q_hi.numerator
        if num * lo_d > lo_n * den:
            lo_n, lo_d = num, den
    best_hi = Fraction(hi_n, hi_d) if hi_n else Fraction(0)
    best_lo = Fraction(lo_n, lo_d) if lo_n else Fraction(0)
    return best_lo, best_hi, at, fold + p.tail_upper()


def dp_ratio_check(
    mechanism: Mechanism,
    universe: Sequence[Any],
    maxlen: int,
    eps,
    slack_tol: Fraction = DEFAULT_SLACK_TOL,
    pair_cap: int = 10_000,
) -> AuditReport:
    """Pointwise likelihood-ratio audit of a pure-DP claim.

    Enumerates every neighbouring database pair over the universe and the
    full listed support of the exact output distributions, both
    directions; outputs are countable, so the pointwise bound implies the
    event bound up to the additive slack.  Passes iff the worst log-ratio
    is at or below eps within the reported slack: the certified-lower
    side must not exceed eps, and the enclosure width plus unmatched mass
    (window tails, support mismatch) must stay below `slack_tol`.  At
    calibrated parameters the true ratio attains e^eps exactly at extreme
    points, so demanding a certified upper bound would reject the ground
    truth; the slack is where that boundary equality is accounted.
    """
    eps = _as_fraction(eps, "eps")
    builder = _builder_of(mechanism)
    scans: Dict[Tuple[int, int], Tuple[Fraction, Fraction, Any, Fraction]] = {}
    best_lo = Fraction(0)
    best_hi = Fraction(0)
    witness = None
    fold_slack = Fraction(0)
    for db_a, db_b in neighbouring_pairs(universe, maxlen, pair_cap):
        mf_a, mf_b = builder(db_a), builder(db_b)
        if mf_a is mf_b:
            continue
        for mf_p, mf_q, d_p, d_q in (
            (mf_a, mf_b, db_a, db_b),
            (mf_b, mf_a, db_b, db_a),
        ):
            key = (id(mf_p), id(mf_q))
            got = scans.get(key)
            if got is None:
                got = scans[key] = _scan_ratio(mf_p, mf_q, slack_tol)
            lo, hi, at, fold = got
            fold_slack = max(fold_slack, fold)
            best_lo = max(best_lo, lo)
            if hi > best_hi:
                best_hi = hi
                witness = {"db": list(d_p), "db_prime": list(d_q), "point": at}
    bits = default_precision_bits()
    if best_hi == 0:
        statistic = BigReal.from_fraction(Fraction(0), bits)
        log_width = Fraction(0)
        ratio_ok = True
    else:
        log_hi = BigReal.from_fraction(best_hi, bits).log()
        if best_lo > 0:
            log_lo = BigReal.from_fraction(best_lo, bits).log()
            statistic = BigReal.interval(log_lo.lower, log_hi.upper, bits)
            log_width = log_hi.upper - log_lo.lower
            # Clean pass, or boundary pass with the gap inside the slack.
            ratio_ok = log_hi.le(eps) is True or (
                log_lo.le(eps) is True and log_width <= slack_tol
            )
        else:
            statistic = log_hi
            log_width = Fraction(0)
            ratio_ok = log_hi.le(eps) is True
    verdict = ratio_ok and fold_slack <= slack_tol
    return AuditReport(
        test="dp-ratio",
        statistic=statistic,
        threshold=eps,
        slack=BigReal.from_fraction(fold_slack + log_width),
        verdict=verdict,
        witness=witness,
    )


def _cross_tail_fn(mechanism: Mechanism) -> Callable:
    shape = mechanism.noise_shape
    if shape is None:
        raise InvalidParam(
            f"{mechanism.label} carries no noise shape; Renyi audits need "
            "analytic control of the off-window divergence sum"
        )
    if shape.kind == "gaussian":
        return lambda c1, c2, alpha, window: gaussian_cross_tail(
            shape.scale, c1, c2, alpha, window
        )
    if shape.kind == "laplace":
        return lambda c1, c2, alpha, window: laplace_cross_tail(
            shape.scale, c1, c2, alpha, window
        )
    raise InvalidParam(f"unknown noise shape {shape.kind!r}")


def renyi_check(
    mechanism: Mechanism,
    universe: Sequence[Any],
    maxlen: int,
    rho,
    alphas: Sequence[Fraction],
    slack_tol: Fraction = DEFAULT_SLACK_TOL,
    pair_cap: int = 10_000,
) -> AuditReport:
    """Renyi-divergence audit of a zCDP claim: D_alpha <= alpha * rho.

    For each neighbouring pair, both directions, and every requested
    order, the divergence is evaluated over the common support window
    with the off-window sum bounded analytically from the mechanism's
    noise shape.  The statistic is the worst margin D_alpha - alpha*rho;
    a check passes when the margin is certified nonpositive, or when its
    enclosure straddles zero by less than `slack_tol` (at integer orders
    the discrete Gaussian attains alpha*rho exactly, so a certified
    strict bound is unachievable at the true claim).
    """
    rho = _as_fraction(rho, "rho")
    alphas = [Fraction(a) for a in alphas]
    if not alphas:
        raise InvalidParam("need at least one Renyi order")
    if any(a <= 1 for a in alphas):
        raise InvalidParam("Renyi orders must exceed 1")
    builder = _builder_of(mechanism)
    cross_tail = _cross_tail_fn(mechanism)
    center = mechanism.noise_shape.center
    seen: Dict[Tuple[int, int, Fraction], BigReal] = {}
    worst: Optional[BigReal] = None
    witness = None
    verdict = True
    slack = Fraction(0)
    for db_a, db_b in neighbouring_pairs(universe, maxlen, pair_cap):
        mf_a, mf_b = builder(db_a), builder(db_b)
        if mf_a is mf_b:
            continue
        for mf_p, mf_q, d_p, d_q in (
            (mf_a, mf_b, db_a, db_b),
            (mf_b, mf_a, db_b, db_a),
        ):
            c_p, c_q = center(d_p), center(d_q)
            lo = max(mf_p.window()[0], mf_q.window()[0])
            hi = min(mf_p.window()[1], mf_q.window()[1])
            for a in alphas:
                key = (id(mf_p), id(mf_q), a)
                margin = seen.get(key)
                if margin is None:
                    off = cross_tail(c_p, c_q, a, (lo, hi))
                    div = renyi_divergence(
                        mf_p.restrict(range(lo, hi + 1)), mf_q, a, extra_tail=off
                    )
                    margin = seen[key] = div - a * rho
                width = margin.upper - margin.lower
                ok = margin.le(0) is True or (
                    margin.lower <= 0 and width <= slack_tol
                )
                if not ok:
                    verdict = False
                if worst is None or margin.upper > worst.upper:
                    worst = margin
                    witness = {
                        "db": list(d_p),
                        "db_prime": list(d_q),
                        "alpha": f"{a.numerator}/{a.denominator}",
                    }
                slack = max(slack, width)
    if worst is None:
        worst = BigReal.from_fraction(Fraction(0))
    return AuditReport(
        test="renyi",
        statistic=worst,
        threshold=Fraction(0),
        slack=BigReal.from_fraction(slack),
        verdict=verdict,
        witness=witness,
    )


# -- loop-cut audits -----------------------------------------------------------


def cut_stability_check(
    spec: LoopSpec,
    point: Any,
    cut: int,
    extra: int,
    expected: Optional[Fraction] = None,
    normalized: bool = False,
    state_cap: Optional[int] = None,
) -> AuditReport:
    """Exact reachability-and-stability audit of one loop-terminal mass.

    Verifies that the mass at `point` is zero for every cut before it is
    first reached, reaches its value no later than `cut`, and stays
    exactly constant through `cut + extra` (all exact rationals).  With
    `normalized`, masses are divided by the total terminal mass at each
    cut, the right notion for rejection loops whose raw masses keep
    growing with the cut.
    """
    if cut < 1:
        raise InvalidParam("cut must be at least 1")
    if extra < 0:
        raise InvalidParam("extra must be a natural number")
    kwargs = {} if state_cap is None else {"state_cap": state_cap}
    values: List[Fraction] = []
    for c in range(cut + extra + 1):
        mf = loop_unroll(spec, c, **kwargs)
        mass = mf.mass(point)
        if not isinstance(mass, (int, Fraction)):
            raise InvalidParam("stability audit needs exact rational kernels")
        mass = Fraction(mass)
        if normalized:
            total = mf.total_lower()
            mass = mass / total if total > 0 else Fraction(0)
        values.append(mass)

    target = values[cut]
    failure = None
    if values[0] != 0:
        failure = {"cut": 0, "reason": "cut 0 must carry no mass"}
    if failure is None and expected is not None and target != Fraction(expected):
        failure = {"cut": cut, "mass": str(target), "expected": str(Fraction(expected))}
    if failure is None:
        for c in range(cut, cut + extra + 1):
            if values[c] != target:
                failure = {"cut": c, "mass": str(values[c]), "expected": str(target)}
                break
    deviation = max(
        (abs(values[c] - target) for c in range(cut, cut + extra + 1)),
        default=Fraction(0),
    )
    if expected is not None:
        deviation = max(deviation, abs(target - Fraction(expected)))
    return AuditReport(
        test="cut-stability",
        statistic=deviation,
        threshold=Fraction(0),
        slack=Fraction(0),
        verdict=failure is None,
        witness=failure or {"cut": cut, "mass": str(target)},
    )
