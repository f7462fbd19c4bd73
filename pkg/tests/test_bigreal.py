"""Certified-interval arithmetic: enclosures must contain the true value
and comparisons must answer only when the enclosure decides them.

Reference values come from mpmath at much higher working precision than
the enclosures under test, so agreement is an independent check rather
than the same computation twice.
"""

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from discretedp.bigreal import (
    BigReal,
    certify,
    default_precision_bits,
    with_refinement,
)
from discretedp.errors import InvalidParam, PrecisionError

E_40 = Fraction("2.718281828459045235360287471352662497757")
LOG2_40 = Fraction("0.6931471805599453094172321214581765680755")

fractions = st.fractions(
    min_value=Fraction(-50), max_value=Fraction(50), max_denominator=64
)


def mp_fraction(x: Fraction) -> mpmath.mpf:
    with mpmath.workdps(60):
        return mpmath.mpf(x.numerator) / x.denominator


# -- construction and enclosure ----------------------------------------------


def test_from_fraction_encloses_exactly():
    x = BigReal.from_fraction(Fraction(3, 7))
    assert x.lower <= Fraction(3, 7) <= x.upper
    assert x.error < Fraction(1, 10**40)


def test_from_int_is_point_like():
    x = BigReal.from_int(12)
    assert x.contains(12)
    assert x.error < Fraction(1, 10**40)


def test_interval_orders_endpoints():
    x = BigReal.interval(Fraction(1, 3), Fraction(1, 2))
    assert x.lower <= Fraction(1, 3)
    assert x.upper >= Fraction(1, 2)
    with pytest.raises(InvalidParam):
        BigReal.interval(Fraction(1, 2), Fraction(1, 3))


@given(fractions, fractions)
def test_field_ops_enclose_the_rational_answer(a, b):
    x, y = BigReal.from_fraction(a), BigReal.from_fraction(b)
    assert (x + y).contains(a + b)
    assert (x - y).contains(a - b)
    assert (x * y).contains(a * b)
    if b != 0:
        assert (x / y).contains(a / b)


@given(fractions, st.integers(min_value=-3, max_value=5))
def test_integer_powers_enclose(a, k):
    if a == 0 and k < 0:
        return
    x = BigReal.from_fraction(a)
    assert (x ** k).contains(a ** k)


@given(fractions)
def test_neg_abs_enclose(a):
    x = BigReal.from_fraction(a)
    assert (-x).contains(-a)
    assert abs(x).contains(abs(a))


def test_reflected_operators_accept_rationals():
    x = BigReal.from_fraction(Fraction(1, 4))
    assert (1 + x).contains(Fraction(5, 4))
    assert (1 - x).contains(Fraction(3, 4))
    assert (2 * x).contains(Fraction(1, 2))
    assert (1 / x).contains(4)


def test_sum_encloses_the_exact_total():
    terms = [BigReal.from_fraction(Fraction(1, k)) for k in range(1, 20)]
    total = sum((Fraction(1, k) for k in range(1, 20)), Fraction(0))
    assert BigReal.sum(terms).contains(total)


# -- transcendental functions vs independent evaluation -----------------------


def test_exp_of_one_matches_reference_digits():
    e = BigReal.from_int(1).exp()
    assert e.contains(E_40) or (abs(e.value - E_40) < Fraction(1, 10**38))
    assert e.error < Fraction(1, 10**38)


def test_log_of_two_matches_reference_digits():
    l2 = BigReal.from_int(2).log()
    assert abs(l2.value - LOG2_40) < Fraction(1, 10**38)


@given(st.fractions(min_value=Fraction(-8), max_value=Fraction(8), max_denominator=32))
def test_exp_encloses_mpmath_value(q):
    ours = BigReal.from_fraction(q).exp()
    with mpmath.workdps(60):
        ref = Fraction(str(mpmath.exp(mp_fraction(q))))
    assert ours.lower - Fraction(1, 10**45) <= ref <= ours.upper + Fraction(1, 10**45)


@given(st.fractions(min_value=Fraction(1, 32), max_value=Fraction(64), max_denominator=32))
def test_log_exp_round_trip(q):
    assert abs(BigReal.from_fraction(q).exp().log().value - q) < Fraction(1, 10**30)


@given(st.fractions(min_value=Fraction(0), max_value=Fraction(30), max_denominator=16))
def test_sqrt_squares_back(q):
    root = BigReal.from_fraction(q).sqrt()
    assert (root * root).contains(q) or abs(root.value**2 - q) < Fraction(1, 10**35)


def test_pow_frac_agrees_with_integer_pow():
    base = BigReal.from_fraction(Fraction(3, 5))
    via_frac = base.pow_frac(Fraction(3))
    via_int = base ** 3
    assert abs(via_frac.value - via_int.value) < Fraction(1, 10**40)


def test_pow_frac_half_is_sqrt():
    base = BigReal.from_fraction(Fraction(7, 2))
    assert abs(base.pow_frac(Fraction(1, 2)).value - base.sqrt().value) < Fraction(1, 10**40)


def test_higher_precision_nests_inside_lower():
    # The same quantity at 2x precision must stay inside the coarse enclosure.
    coarse = BigReal.from_fraction(Fraction(1, 3), 96).exp()
    fine = BigReal.from_fraction(Fraction(1, 3), 192).exp()
    assert coarse.lower <= fine.lower and fine.upper <= coarse.upper
    assert fine.error < coarse.error


# -- three-valued comparisons --------------------------------------------------


def test_comparisons_answer_when_separated():
    # 1/4 is dyadic, so the enclosure is a true point and boundary
    # comparisons settle; non-dyadic endpoints stay a hair wide.
    quarter = BigReal.from_fraction(Fraction(1, 4))
    assert quarter.lt(Fraction(1, 2)) is True
    assert quarter.le(Fraction(1, 4)) is True
    assert quarter.gt(Fraction(1, 2)) is False
    assert quarter.ge(Fraction(1, 4)) is True
    assert BigReal.from_fraction(Fraction(1, 3)).le(Fraction(1, 3)) is None


def test_comparisons_stay_undecided_across_overlap():
    wide = BigReal.interval(Fraction(0), Fraction(1))
    assert wide.lt(Fraction(1, 2)) is None
    assert wide.ge(Fraction(1, 2)) is None
    assert wide.sign() is None


def test_sign_of_separated_intervals():
    assert BigReal.from_fraction(Fraction(2, 5)).sign() == 1
    assert BigReal.from_fraction(Fraction(-2, 5)).sign() == -1


def test_certify_raises_on_undecided():
    assert certify(True, "q") is True
    with pytest.raises(PrecisionError):
        certify(None, "q")


def test_with_refinement_settles_a_tight_comparison():
    # exp(1) > e - 10^-30 needs more than the starting precision.
    target = E_40 - Fraction(1, 10**30)

    outcome = with_refinement(
        lambda bits: BigReal.from_int(1, bits).exp(),
        lambda x: x.gt(target),
        start_bits=48,
    )
    assert outcome is True


def test_with_refinement_gives_up_at_max_bits():
    point = BigReal.from_fraction(Fraction(1, 2))
    with pytest.raises(PrecisionError):
        with_refinement(
            lambda bits: BigReal.interval(Fraction(0), Fraction(1), bits),
            lambda x: x.lt(Fraction(1, 2)),
            start_bits=64,
            max_bits=256,
        )
    del point


# -- configuration -------------------------------------------------------------


def test_precision_env_override(monkeypatch):
    monkeypatch.setenv("DISCRETE_DP_PRECISION_BITS", "128")
    assert default_precision_bits() == 128
    monkeypatch.setenv("DISCRETE_DP_PRECISION_BITS", "not-a-number")
    with pytest.raises(InvalidParam):
        default_precision_bits()
    monkeypatch.setenv("DISCRETE_DP_PRECISION_BITS", "1")
    with pytest.raises(InvalidParam):
        default_precision_bits()
    monkeypatch.delenv("DISCRETE_DP_PRECISION_BITS")
    assert default_precision_bits() >= 128


def test_float_and_str_views():
    x = BigReal.from_fraction(Fraction(1, 4))
    assert float(x) == 0.25
    assert x.approx_str().startswith("0.25")
