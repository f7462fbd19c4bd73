"""Exact and certified-precision distribution oracles.

Everything the audit harness compares samplers and mechanisms against
lives here: closed-form PMFs with analytic truncation tails, finite-cut
loop unrolling with exact rational masses, divergences, and chi-squared
tail probabilities. Nothing in this package draws a random sample.
"""

from ..bigreal import BigReal, certify, default_precision_bits, with_refinement
from ._chi2 import chi2_sf
from ._divergence import renyi_divergence, tv_distance
from ._loops import (
    DEFAULT_STATE_CAP,
    LoopSpec,
    exp_neg_accept_mass,
    exp_neg_unit_trial_spec,
    geometric_trial_spec,
    loop_unroll,
    uniform_rejection_spec,
    until_spec,
)
from ._mass import MassFunction, mass_add, mass_lower, mass_mul, mass_upper
from ._pmfs import (
    default_gaussian_halfwidth,
    default_laplace_halfwidth,
    gaussian_cross_tail,
    gaussian_mass_function,
    gaussian_pmf,
    geo_pmf,
    laplace_cdf,
    laplace_cross_tail,
    laplace_mass_function,
    laplace_pmf,
)

__all__ = [
    "BigReal",
    "DEFAULT_STATE_CAP",
    "LoopSpec",
    "MassFunction",
    "certify",
    "chi2_sf",
    "default_gaussian_halfwidth",
    "default_laplace_halfwidth",
    "default_precision_bits",
    "exp_neg_accept_mass",
    "exp_neg_unit_trial_spec",
    "gaussian_cross_tail",
    "gaussian_mass_function",
    "gaussian_pmf",
    "geo_pmf",
    "geometric_trial_spec",
    "laplace_cdf",
    "laplace_cross_tail",
    "laplace_mass_function",
    "laplace_pmf",
    "loop_unroll",
    "mass_add",
    "mass_lower",
    "mass_mul",
    "mass_upper",
    "renyi_divergence",
    "tv_distance",
    "uniform_rejection_spec",
    "until_spec",
    "with_refinement",
]
