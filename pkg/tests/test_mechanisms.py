"""Composite mechanisms: histograms, means, maxima, sparse vector."""

from fractions import Fraction

import numpy as np
import pytest

from discretedp.entropy import SeededSource
from discretedp.errors import InvalidParam
from discretedp.mechanisms import (
    Bins,
    HistogramResult,
    approx_max,
    clipped,
    exact_bin_count,
    noised_bin_count,
    noised_histogram,
    noised_mean,
    per_bin_scale,
    sparse_vector,
)
from discretedp.privacy import Budget, DpSystem, Query
from discretedp.samplers import RationalParam


def mod_bins(n):
    return Bins(n, lambda r: int(r) % n)


# -- bins and counts ---------------------------------------------------------------


def test_exact_bin_count_counts_assigned_records():
    q = exact_bin_count(mod_bins(3), 1)
    assert q.sensitivity == 1
    assert q.evaluate((0, 1, 1, 2, 4)) == 3  # 1, 1, 4


def test_noised_bin_count_claims_an_equal_share():
    m = noised_bin_count(mod_bins(10), 4, 1, 1, DpSystem.PURE)
    assert m.claimed == Budget(Fraction(1, 10))
    assert m.noise_shape.scale == Fraction(10)


def test_per_bin_scale_is_bins_over_gamma():
    assert per_bin_scale(mod_bins(10), 1, 1) == Fraction(10)
    assert per_bin_scale(mod_bins(4), 2, 3) == Fraction(6)


def test_ten_bin_histogram_budget_is_exact():
    bins = mod_bins(10)
    shares = [noised_bin_count(bins, b, 1, 1, DpSystem.PURE).claimed for b in range(10)]
    assert all(s == Budget(Fraction(1, 10)) for s in shares)
    assert sum((s for s in shares), Budget(Fraction(0))) == Budget(Fraction(1))
    assert noised_histogram(bins, 1, 1, DpSystem.PURE).claimed == Budget(Fraction(1))


def test_zcdp_histogram_claim():
    # per bin rho = (gamma/n)^2 / 2, summed over n bins
    m = noised_histogram(mod_bins(3), 1, 1, DpSystem.ZCDP)
    assert m.claimed == Budget(Fraction(1, 6))


def test_histogram_run_shape_and_determinism():
    m = noised_histogram(mod_bins(3), 1, 1, DpSystem.PURE)
    db = (0, 1, 1, 2)
    a = m.run(db, SeededSource(5))
    b = m.run(db, SeededSource(5))
    assert isinstance(a, HistogramResult)
    assert len(a) == 3
    assert list(a) == list(b)
    assert a[1] == list(a)[1]


def test_histogram_tracks_true_counts_at_weak_noise():
    m = noised_histogram(mod_bins(3), 60, 1, DpSystem.PURE)  # scale 1/20
    counts = np.array(list(m.run((0, 0, 0, 1, 2, 2), SeededSource(7))))
    assert np.all(np.abs(counts - np.array([3, 1, 2])) <= 1)


# -- scalar helpers ----------------------------------------------------------------


def test_clipped_clamps_into_the_window():
    assert clipped(5, 2) == 2
    assert clipped(-5, 2) == 0
    assert clipped(1, 2) == 1


def test_noised_mean_claims():
    assert noised_mean(2, 1, 1, DpSystem.PURE).claimed == Budget(Fraction(1))
    assert noised_mean(2, 1, 1, DpSystem.ZCDP).claimed == Budget(Fraction(1, 4))


def test_noised_mean_returns_a_sum_count_pair():
    m = noised_mean(2, 40, 1, DpSystem.PURE)  # nearly noiseless
    s, n = m.run((0, 1, 2, 2), SeededSource(5))
    assert abs(s - 5) <= 1
    assert abs(n - 4) <= 1


def test_noised_mean_requires_a_positive_bound():
    with pytest.raises(InvalidParam):
        noised_mean(0, 1, 1, DpSystem.PURE)


# -- approximate max ---------------------------------------------------------------


def test_approx_max_returns_a_bin_index():
    m = approx_max(mod_bins(3), None, 1, 1, DpSystem.PURE)
    assert m.claimed == Budget(Fraction(1))
    for seed in range(8):
        assert 0 <= m.run((0, 1, 2, 2), SeededSource(seed)) <= 2


def test_approx_max_finds_a_wide_gap():
    m = approx_max(mod_bins(3), None, 60, 1, DpSystem.PURE)
    db = (0,) * 30 + (1, 2)
    assert all(m.run(db, SeededSource(s)) == 0 for s in range(10))


# -- sparse vector -----------------------------------------------------------------


def count_query():
    return Query(lambda db: len(db), 1, "count")


def zero_query():
    return Query(lambda db: 0, 1, "zero")


def test_sparse_vector_claims_epsilon_even_with_no_queries():
    m = sparse_vector([], 1, RationalParam(1, 1))
    assert m.claimed == Budget(Fraction(1))
    assert m.run((0,), SeededSource(3)) is None


def test_sparse_vector_requires_unit_sensitivity():
    doubled = Query(lambda db: 2 * len(db), 2, "double")
    with pytest.raises(InvalidParam):
        sparse_vector([doubled], 1, RationalParam(1, 1))


def test_sparse_vector_validates_declared_sensitivities():
    liar = Query(lambda db: 2 * len(db), 1, "liar")
    with pytest.raises(InvalidParam):
        sparse_vector([liar], 1, RationalParam(1, 1),
                      validate_universe=(0, 1), validate_maxlen=2)
    honest = Query(lambda db: len(db), 1, "count")
    sparse_vector([honest], 1, RationalParam(1, 1),
                  validate_universe=(0, 1), validate_maxlen=2)


def test_sparse_vector_fires_on_a_deterministic_gap():
    m = sparse_vector([count_query(), zero_query()], 5, RationalParam(100, 1))
    db = tuple(range(20))
    assert all(m.run(db, SeededSource(s)) == 0 for s in range(10))


def test_sparse_vector_passes_a_hopeless_threshold():
    m = sparse_vector([zero_query(), zero_query()], 40, RationalParam(100, 1))
    assert all(m.run((0,), SeededSource(s)) is None for s in range(10))


def test_sparse_vector_builder_is_a_distribution():
    bins = Bins(2, lambda r: max(0, min(1, int(r))))
    qs = [exact_bin_count(bins, b) for b in range(2)]
    m = sparse_vector(qs, 1, RationalParam(1, 1))
    mf = m.exact_builder((0, 1))
    assert set(mf.masses) == {0, 1, None}
    assert mf.normalized_within(Fraction(1, 10**9))
