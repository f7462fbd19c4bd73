"""Budget accounting, database enumeration, and the mechanism calculus."""

from collections import Counter
from fractions import Fraction

import pytest

from discretedp.bigreal import BigReal
from discretedp.entropy import SeededSource
from discretedp.errors import EnumerationTooLarge, InvalidParam, SystemMismatch
from discretedp.exactdist import laplace_pmf
from discretedp.privacy import (
    ZERO_BUDGET,
    Budget,
    DpSystem,
    Query,
    approx_dp_of,
    compose,
    const,
    databases,
    neighbouring_pairs,
    noise,
    of_app_dp,
    postprocess,
    pure_to_zcdp,
    sensitivity_check,
)

DELTA = Fraction(1, 10**6)
# eps'(rho=1/2, delta=1e-6) = rho + 2*sqrt(rho*ln(1/delta)), 40 digits.
EPS_PRIME_HALF = Fraction("5.756521769756931978630121358100996004349")


def count_query():
    return Query(lambda db: len(db), 1, "count")


def clipped_sum_query(bound):
    return Query(lambda db: sum(min(r, bound) for r in db), bound, "clipped-sum")


# -- budgets ---------------------------------------------------------------------


def test_budget_is_an_exact_nonnegative_rational():
    assert Budget(Fraction(1, 2)).value == Fraction(1, 2)
    with pytest.raises(InvalidParam):
        Budget(0.5)
    with pytest.raises(InvalidParam):
        Budget(Fraction(-1, 3))


def test_budget_parse_accepts_only_rational_text():
    assert Budget.parse("3/4") == Budget(Fraction(3, 4))
    assert Budget.parse("2") == Budget(Fraction(2))
    for bad in ("abc", "-1/2", "0.25"):
        with pytest.raises(InvalidParam):
            Budget.parse(bad)


def test_budget_arithmetic_and_order():
    assert Budget(Fraction(1, 3)) + Budget(Fraction(1, 6)) == Budget(Fraction(1, 2))
    assert Budget(Fraction(1, 3)) < Budget(Fraction(1, 2))
    assert str(Budget(Fraction(5, 8))) == "5/8"
    assert ZERO_BUDGET.value == 0


# -- enumeration -----------------------------------------------------------------


def test_database_count_over_the_tiny_universe():
    dbs = list(databases((0, 1, 2), 3))
    assert len(dbs) == 40  # multisets of size <= 3 from 3 symbols
    assert len(set(dbs)) == 40


def test_neighbouring_pairs_are_unique_and_complete():
    pairs = list(neighbouring_pairs((0, 1, 2), 3))
    assert len(pairs) == 183
    assert len({frozenset((a, b)) for a, b in pairs}) == 183
    for a, b in pairs:
        # one record added, removed, or replaced
        left = Counter(a) - Counter(b)
        right = Counter(b) - Counter(a)
        assert max(sum(left.values()), sum(right.values())) == 1


def test_pair_cap_guards_the_enumeration():
    with pytest.raises(EnumerationTooLarge):
        list(neighbouring_pairs((0, 1, 2), 3, pair_cap=5))


# -- sensitivity -----------------------------------------------------------------


def test_count_has_sensitivity_one():
    report = sensitivity_check(count_query(), 1, (0, 1, 2), 3)
    assert report.ok and report.max_delta == 1
    a, b = report.witness  # the pair achieving the maximum
    assert abs(len(a) - len(b)) == 1


def test_underclaimed_sensitivity_fails_with_a_witness():
    report = sensitivity_check(clipped_sum_query(2), 1, (0, 1, 2), 3)
    assert not report.ok
    assert report.max_delta == 2
    a, b = report.witness
    q = clipped_sum_query(2)
    assert abs(q.evaluate(a) - q.evaluate(b)) == 2


# -- noise mechanisms ------------------------------------------------------------


def test_pure_noise_claims_the_ratio():
    m = noise(count_query(), 1, 2, 3, DpSystem.PURE)
    assert m.system is DpSystem.PURE
    assert m.claimed == Budget(Fraction(2, 3))
    assert m.noise_shape.kind == "laplace"
    assert m.noise_shape.scale == Fraction(3, 2)  # delta / gamma


def test_zcdp_noise_claims_half_the_squared_ratio():
    m = noise(count_query(), 1, 1, 2, DpSystem.ZCDP)
    assert m.claimed == Budget(Fraction(1, 8))
    assert m.noise_shape.kind == "gaussian"
    assert m.noise_shape.scale == Fraction(2)


def test_noise_builder_translates_by_the_query_value():
    m = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    mf = m.exact_builder((0, 1))
    center = laplace_pmf(Fraction(2), 0)
    got = mf.masses[2]
    assert got.lower == center.lower and got.upper == center.upper


def test_noise_builder_memoizes_on_the_query_value():
    m = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    assert m.exact_builder((0, 1)) is m.exact_builder((2, 0))
    assert m.exact_builder((0, 1)) is not m.exact_builder((0,))


def test_noise_runs_to_an_integer_near_the_count():
    m = noise(count_query(), 1, 1, 1, DpSystem.PURE)
    value = m.run((0, 0, 0), SeededSource(17))
    assert isinstance(value, int)


# -- calculus --------------------------------------------------------------------


def test_composition_adds_claims_exactly():
    a = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    b = noise(count_query(), 1, 1, 3, DpSystem.PURE)
    both = compose(a, b)
    assert both.claimed == Budget(Fraction(5, 6))
    out = both.run((0, 1), SeededSource(23))
    assert isinstance(out, tuple) and len(out) == 2


def test_composition_rejects_mixed_systems():
    a = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    b = noise(count_query(), 1, 1, 2, DpSystem.ZCDP)
    with pytest.raises(SystemMismatch):
        compose(a, b)


def test_const_joins_with_either_system():
    a = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    both = compose(const(99), a)
    assert both.system is DpSystem.PURE
    assert both.claimed == a.claimed
    assert const(7).claimed == ZERO_BUDGET


def test_adaptive_composition_needs_an_upfront_budget():
    a = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    with pytest.raises(InvalidParam):
        compose(a, lambda out: const(out))
    with pytest.raises(InvalidParam):
        compose(a, noise(count_query(), 1, 1, 2, DpSystem.PURE),
                continuation_budget=Budget(Fraction(1)))


def test_adaptive_composition_enforces_the_budget_at_run_time():
    a = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    over = compose(
        a,
        lambda out: noise(count_query(), 1, 1, 1, DpSystem.PURE),
        continuation_budget=Budget(Fraction(1, 4)),
    )
    assert over.claimed == Budget(Fraction(3, 4))  # 1/2 + reserved 1/4
    with pytest.raises(InvalidParam):
        over.run((0, 1), SeededSource(29))
    ok = compose(
        a,
        lambda out: noise(count_query(), 1, 1, 4, DpSystem.PURE),
        continuation_budget=Budget(Fraction(1, 4)),
    )
    first, second = ok.run((0, 1), SeededSource(29))
    assert isinstance(first, int) and isinstance(second, int)


def test_postprocess_keeps_claim_and_pushes_masses_forward():
    m = noise(count_query(), 1, 1, 1, DpSystem.PURE)
    folded = postprocess(m, abs)
    assert folded.claimed == m.claimed
    assert folded.system is m.system
    assert folded.noise_shape is None  # shape does not survive arbitrary maps
    mf = m.exact_builder(())
    fmf = folded.exact_builder(())
    one = fmf.masses[1]
    direct = mf.masses[1] + mf.masses[-1]
    assert one.lower == direct.lower and one.upper == direct.upper


# -- approximate-DP conversions ----------------------------------------------------


def test_pure_budget_converts_to_itself():
    eps = approx_dp_of(DpSystem.PURE, Budget(Fraction(3, 4)), DELTA)
    assert eps.lower == Fraction(3, 4) and eps.upper == Fraction(3, 4)


def test_zcdp_conversion_matches_the_reference_value():
    eps = approx_dp_of(DpSystem.ZCDP, Budget(Fraction(1, 2)), DELTA)
    assert eps.lower - Fraction(1, 10**25) <= EPS_PRIME_HALF <= eps.upper + Fraction(1, 10**25)
    assert eps.upper - eps.lower < Fraction(1, 10**15)


def test_of_app_dp_round_trip_is_certified():
    for target in (Fraction(3), Fraction(3, 2)):
        budget = of_app_dp(DpSystem.ZCDP, DELTA, target)
        assert (2**64) % budget.value.denominator == 0  # dyadic answer
        back = approx_dp_of(DpSystem.ZCDP, budget, DELTA)
        assert back.upper <= target
    assert of_app_dp(DpSystem.PURE, DELTA, Fraction(3, 2)) == Budget(Fraction(3, 2))


def test_pure_to_zcdp_is_half_the_square():
    assert pure_to_zcdp(Budget(Fraction(3))) == Budget(Fraction(9, 2))
    assert pure_to_zcdp(ZERO_BUDGET) == ZERO_BUDGET
