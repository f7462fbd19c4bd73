"""Exact discrete samplers, a DP budget calculus, and an audit harness."""

from .bigreal import BigReal, certify, default_precision_bits, with_refinement
from .entropy import EntropySource, OsRandomSource, ReplaySource, SeededSource, uniform
from .samplers import (
    ALGO1,
    ALGO2,
    AUTO,
    BernoulliExpNegSampler,
    BernoulliSampler,
    GaussianSampler,
    GeometricSampler,
    LaplaceAlgo,
    LaplaceSampler,
    RationalParam,
    Sampler,
    UniformSampler,
    bernoulli,
    bernoulli_exp_neg,
    gaussian,
    geometric,
    laplace,
    laplace_algo1,
    laplace_algo2,
    sampler_from_config,
    until,
)
from . import exactdist
from .privacy import (
    Budget,
    DpSystem,
    Mechanism,
    NoiseShape,
    Query,
    SensitivityReport,
    ZERO_BUDGET,
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
from .mechanisms import (
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
from .audit import (
    AuditReport,
    cut_stability_check,
    dp_ratio_check,
    empirical_pmf,
    gof_test,
    renyi_check,
    two_sample_test,
)

__version__ = "0.1.0"
