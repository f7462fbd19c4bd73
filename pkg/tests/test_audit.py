"""Statistical and exact audits: positive runs and negative controls.

Every fail-case here is a deliberately wrong claim; the audits must
reject it. Seeds are fixed so the verdicts are reproducible.
"""

import json
from fractions import Fraction

import pytest

from discretedp.audit import (
    AuditReport,
    cut_stability_check,
    dp_ratio_check,
    empirical_pmf,
    gof_test,
    renyi_check,
    two_sample_test,
)
from discretedp.entropy import SeededSource
from discretedp.errors import DegenerateCells, InvalidParam, SupportMismatch
from discretedp.exactdist import (
    LoopSpec,
    MassFunction,
    geometric_trial_spec,
    uniform_rejection_spec,
)
from discretedp.mechanisms import Bins, exact_bin_count, sparse_vector
from discretedp.privacy import (
    Budget,
    DpSystem,
    Mechanism,
    Query,
    noise,
    postprocess,
    pure_to_zcdp,
)
from discretedp.samplers import (
    ALGO1,
    ALGO2,
    LaplaceSampler,
    RationalParam,
    UniformSampler,
)


def count_query():
    return Query(lambda db: len(db), 1, "count")


# -- empirical pmf -----------------------------------------------------------------


def test_empirical_pmf_is_exact_rational():
    mf = empirical_pmf(UniformSampler(4), 1000, seed=3)
    total = sum(mf.masses.values())
    assert total == 1
    assert all(m.denominator == 1000 or 1000 % m.denominator == 0 for m in mf.masses.values())


def test_empirical_pmf_reproduces_with_the_seed():
    a = empirical_pmf(UniformSampler(6), 500, seed=9)
    b = empirical_pmf(UniformSampler(6), 500, seed=9)
    assert a.masses == b.masses


# -- goodness of fit ---------------------------------------------------------------


def test_gof_accepts_the_true_distribution():
    sampler = LaplaceSampler(RationalParam(1, 1))
    report = gof_test(empirical_pmf(sampler, 2 * 10**5, seed=12), sampler.exact_mass())
    assert report.verdict
    assert report.test == "gof"


def test_gof_rejects_a_wrong_scale():
    drawn = LaplaceSampler(RationalParam(1, 1))
    claimed = LaplaceSampler(RationalParam(2, 1))
    report = gof_test(empirical_pmf(drawn, 2 * 10**5, seed=12), claimed.exact_mass())
    assert not report.verdict


def test_gof_needs_enough_expected_mass_per_cell():
    with pytest.raises(DegenerateCells):
        gof_test(empirical_pmf(UniformSampler(1), 100, seed=1),
                 UniformSampler(1).exact_mass())


# -- two-sample --------------------------------------------------------------------


def test_two_sample_accepts_identical_laws():
    report = two_sample_test(
        LaplaceSampler(RationalParam(2, 1), ALGO1),
        LaplaceSampler(RationalParam(2, 1), ALGO2),
        10**5,
        seed=33,
    )
    assert report.verdict
    assert report.draws == 10**5


def test_two_sample_separates_different_scales():
    report = two_sample_test(
        LaplaceSampler(RationalParam(1, 1)),
        LaplaceSampler(RationalParam(2, 1)),
        3 * 10**4,
        seed=33,
    )
    assert not report.verdict


def test_two_sample_enforces_a_draw_floor():
    with pytest.raises(InvalidParam):
        two_sample_test(
            LaplaceSampler(RationalParam(1, 1)),
            LaplaceSampler(RationalParam(1, 1)),
            9999,
            seed=1,
        )


# -- pointwise dp ratio --------------------------------------------------------------


def test_dp_ratio_accepts_an_honest_claim():
    m = noise(count_query(), 1, 1, 1, DpSystem.PURE)
    report = dp_ratio_check(m, (0, 1), 2, eps=Budget(Fraction(1)))
    assert report.verdict
    assert report.threshold == Fraction(1)


def test_dp_ratio_rejects_an_underclaim_with_a_witness():
    m = noise(count_query(), 1, 1, 1, DpSystem.PURE)
    report = dp_ratio_check(m, (0, 1), 2, eps=Budget(Fraction(1, 2)))
    assert not report.verdict
    assert report.witness is not None
    assert "db" in report.witness and "db_prime" in report.witness


def test_dp_ratio_needs_shared_support():
    # Releasing the raw count puts mass on disjoint points for neighbours.
    raw = Mechanism(
        run=lambda db, src: len(db),
        system=DpSystem.PURE,
        claimed=Budget(Fraction(1)),
        exact_builder=lambda db: MassFunction({len(db): Fraction(1)}),
        label="raw-count",
    )
    with pytest.raises(SupportMismatch):
        dp_ratio_check(raw, (0, 1), 2, eps=Budget(Fraction(1)))


def test_dp_ratio_audits_sparse_vector():
    bins = Bins(2, lambda r: max(0, min(1, int(r))))
    queries = [exact_bin_count(bins, b) for b in range(2)]
    honest = sparse_vector(queries, 1, RationalParam(1, 1))
    assert dp_ratio_check(honest, (0, 1), 2, eps=Budget(Fraction(1))).verdict
    lying = sparse_vector(queries, 1, RationalParam(1, 1))
    report = dp_ratio_check(lying, (0, 1), 2, eps=Budget(Fraction(1, 4)))
    assert not report.verdict


# -- renyi -------------------------------------------------------------------------


def test_renyi_accepts_an_honest_gaussian_claim():
    m = noise(count_query(), 1, 1, 1, DpSystem.ZCDP)
    report = renyi_check(m, (0, 1), 2, rho=Budget(Fraction(1, 2)),
                         alphas=(Fraction(3, 2), Fraction(2)))
    assert report.verdict


def test_renyi_rejects_an_underclaim():
    m = noise(count_query(), 1, 1, 1, DpSystem.ZCDP)
    report = renyi_check(m, (0, 1), 2, rho=Budget(Fraction(1, 8)),
                         alphas=(Fraction(2),))
    assert not report.verdict
    assert report.witness is not None


def test_renyi_covers_laplace_through_the_conversion():
    m = noise(count_query(), 1, 1, 2, DpSystem.PURE)
    rho = pure_to_zcdp(m.claimed)  # eps^2 / 2
    report = renyi_check(m, (0, 1), 2, rho=rho, alphas=(Fraction(2),))
    assert report.verdict


def test_renyi_requires_a_noise_shape():
    m = postprocess(noise(count_query(), 1, 1, 1, DpSystem.ZCDP), abs)
    with pytest.raises(InvalidParam):
        renyi_check(m, (0, 1), 2, rho=Budget(Fraction(1, 2)), alphas=(Fraction(2),))


# -- cut stability -----------------------------------------------------------------


def test_cut_stability_geometric_masses():
    spec = geometric_trial_spec(Fraction(1, 2))
    for count, mass in ((1, Fraction(1, 2)), (2, Fraction(1, 4)), (3, Fraction(1, 8))):
        report = cut_stability_check(spec, (False, count), cut=count + 1, extra=8,
                                     expected=mass)
        assert report.verdict
        assert report.statistic == 0  # max deviation over the stability window
        assert report.witness["mass"] == str(mass)


def test_cut_stability_uniform_is_stable_only_after_normalizing():
    spec = uniform_rejection_spec(3)
    normalized = cut_stability_check(spec, 1, cut=3, extra=9, expected=Fraction(1, 3),
                                     normalized=True)
    assert normalized.verdict
    raw = cut_stability_check(spec, 1, cut=3, extra=9, expected=Fraction(1, 3))
    assert not raw.verdict  # finite-cut mass still below the limit


def test_cut_stability_detects_a_wrong_expectation():
    spec = geometric_trial_spec(Fraction(1, 2))
    report = cut_stability_check(spec, (False, 1), cut=2, extra=4,
                                 expected=Fraction(1, 3))
    assert not report.verdict


def test_cut_stability_rejects_inexact_kernels():
    # Float kernel masses cannot support an exact-equality audit.
    leaky = LoopSpec(
        init="go",
        guard=lambda s: s == "go",
        kernel=lambda s: [("done", 0.5), ("go", 0.5)],
    )
    with pytest.raises(InvalidParam):
        cut_stability_check(leaky, "done", cut=2, extra=2)


# -- report plumbing ---------------------------------------------------------------


def test_report_json_round_trip():
    m = noise(count_query(), 1, 1, 1, DpSystem.PURE)
    report = dp_ratio_check(m, (0, 1), 2, eps=Budget(Fraction(1)))
    blob = json.loads(report.to_json())
    assert blob["test"] == report.test
    assert blob["verdict"] == "pass"
    assert isinstance(blob["statistic"], str)


def test_report_truthiness_follows_the_verdict():
    good = AuditReport(test="t", statistic=1, threshold=2, slack=0, verdict=True)
    bad = AuditReport(test="t", statistic=3, threshold=2, slack=0, verdict=False)
    assert good and not bad
