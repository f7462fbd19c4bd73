"""Exact-arithmetic samplers over byte entropy.

Every algorithm here works purely on integers and ratios of integers;
nothing constructs a float. Distribution parameters are literal
numerator/denominator pairs and are never reduced, because several loops
(the decomposition Laplace algorithm in particular) branch on the literal
pair, and byte-level reproducibility depends on it.

The module exposes both plain functions (one draw from an entropy source)
and small sampler objects that know their exact distribution oracle and
can draw large batches through the compiled fast lane. The fast lane is
an optimization only: for a given seed it consumes byte-for-byte the same
entropy stream as the pure path and returns identical samples; tests hold
the two paths to exact equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple

import numpy as np

from .entropy import EntropySource, uniform
from .errors import InvalidParam, IterationCapExceeded
from . import exactdist

# Scale threshold above which the decomposition algorithm (algo2) is the
# faster Laplace loop.  algo1 does work proportional to the scale while
# algo2 pays a roughly flat cost per sample, and the measured tie on this
# machine sits near scale 2 (reproduce with `discretedp bench`), so Auto
# switches there.
DEFAULT_AUTO_MIX = Fraction(2)

_FAST_UNIFORM_MAX = 1 << 55
_FAST_DEN_MAX = 1 << 40


@dataclass(frozen=True)
class RationalParam:
    """A literal num/den pair. Kept unreduced on purpose."""

    num: int
    den: int

    def __post_init__(self):
        if not isinstance(self.num, int) or not isinstance(self.den, int):
            raise InvalidParam("rational parameter parts must be integers")
        if self.den < 1:
            raise InvalidParam("denominator must be >= 1")
        if self.num < 0:
            raise InvalidParam("numerator must be >= 0")

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    @classmethod
    def parse(cls, text: str) -> "RationalParam":
        parts = text.strip().split("/")
        if len(parts) == 1:
            return cls(int(parts[0]), 1)
        if len(parts) == 2:
            return cls(int(parts[0]), int(parts[1]))
        raise InvalidParam(f"cannot parse rational {text!r}")

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


@dataclass(frozen=True)
class LaplaceAlgo:
    """Which Laplace loop to run: algo1, algo2, or auto-switch at `mix`."""

    choice: str
    mix: Optional[Fraction] = None

    def __post_init__(self):
        if self.choice not in ("algo1", "algo2", "auto"):
            raise InvalidParam(f"unknown algorithm {self.choice!r}")
        if self.mix is not None and self.choice != "auto":
            raise InvalidParam("mix threshold only applies to auto")

    def resolve(self, scale: Fraction) -> str:
        if self.choice != "auto":
            return self.choice
        mix = DEFAULT_AUTO_MIX if self.mix is None else self.mix
        if mix == math.inf:
            return "algo1"
        return "algo2" if scale >= mix else "algo1"

    @classmethod
    def parse(cls, text: str) -> "LaplaceAlgo":
        return cls(text.strip().lower())


ALGO1 = LaplaceAlgo("algo1")
ALGO2 = LaplaceAlgo("algo2")
AUTO = LaplaceAlgo("auto")


# -- combinators and primitive trials ---------------------------------------


def until(
    src: EntropySource,
    body: Callable[[EntropySource], object],
    cond: Callable[[object], bool],
    max_iterations: Optional[int] = None,
):
    """Resample `body` until `cond` holds; the conditioned distribution.

    No cap by default: rejection loops terminate almost surely and a cap
    would bias the distribution. `max_iterations` exists for fuzzing with
    replay scripts.
    """
    iterations = 0
    while True:
        value = body(src)
        if cond(value):
            return value
        iterations += 1
        if max_iterations is not None and iterations >= max_iterations:
            raise IterationCapExceeded(f"no acceptance within {max_iterations} tries")


def bernoulli(src: EntropySource, p: RationalParam) -> bool:
    """True with probability exactly num/den, via one uniform draw."""
    if p.num > p.den:
        raise InvalidParam("probability numerator exceeds denominator")
    return uniform(src, p.den) < p.num


def _exp_neg_unit(src: EntropySource, num: int, den: int) -> bool:
    """Bernoulli(e^-(num/den)) for num/den <= 1, by the alternating series.

    Draw Bernoulli(gamma/k) for k = 1, 2, ... until the first failure;
    accept exactly when the exit index is odd.
    """
    k = 1
    while uniform(src, den * k) < num:
        k += 1
    return k % 2 == 1


def bernoulli_exp_neg(src: EntropySource, gamma: RationalParam) -> bool:
    """True with probability exactly e^-(num/den), any gamma >= 0.

    gamma > 1 splits into floor(gamma) unit trials at 1/1 and one trial
    on the remainder (num mod den)/den, multiplying the acceptance
    probabilities: e^-gamma = (e^-1)^floor * e^-frac.
    """
    if gamma.num <= gamma.den:
        return _exp_neg_unit(src, gamma.num, gamma.den)
    whole = gamma.num // gamma.den
    for _ in range(whole):
        if not _exp_neg_unit(src, 1, 1):
            return False
    return _exp_neg_unit(src, gamma.num - whole * gamma.den, gamma.den)


def geometric(
    src: EntropySource,
    trial: Callable[[EntropySource], bool],
    max_iterations: Optional[int] = None,
) -> int:
    """Number of trials up to and including the first failure (>= 1)."""
    count = 0
    while True:
        count += 1
        if not trial(src):
            return count
        if max_iterations is not None and count >= max_iterations:
            raise IterationCapExceeded(f"no failure within {max_iterations} trials")


# -- the two Laplace loops ---------------------------------------------------


def laplace_algo1(src: EntropySource, scale: RationalParam) -> int:
    """Rejection form: geometric magnitude with success e^-(den/num).

    Magnitude = geometric(e^-(den/num)) - 1, independent fair sign coin,
    resampling the pair (negative, 0) so zero is not double-counted.
    """
    num, den = scale.num, scale.den
    if num < 1:
        raise InvalidParam("scale must be positive")
    trial_gamma = RationalParam(den, num)
    while True:
        magnitude = geometric(src, lambda s: bernoulli_exp_neg(s, trial_gamma)) - 1
        negative = bernoulli(src, RationalParam(1, 2))
        if negative and magnitude == 0:
            continue
        return -magnitude if negative else magnitude


def laplace_algo2(src: EntropySource, scale: RationalParam) -> int:
    """Decomposition form: exponential on num-blocks, then divide by den.

    U is uniform on [0, num) accepted with probability e^-(U/num); V is
    geometric(e^-1) - 1; X = U + num*V is then exponential with rate
    1/num over the naturals, and Y = X // den has the right one-sided
    law. Sign coin and (negative, 0) rejection as in algo1.
    """
    num, den = scale.num, scale.den
    if num < 1:
        raise InvalidParam("scale must be positive")
    while True:
        while True:
            u = uniform(src, num)
            if bernoulli_exp_neg(src, RationalParam(u, num)):
                break
        v = geometric(src, lambda s: bernoulli_exp_neg(s, RationalParam(1, 1))) - 1
        y = (u + num * v) // den
        negative = bernoulli(src, RationalParam(1, 2))
        if negative and y == 0:
            continue
        return -y if negative else y


def laplace(src: EntropySource, scale: RationalParam, algo: LaplaceAlgo = AUTO) -> int:
    if algo.resolve(scale.value) == "algo2":
        return laplace_algo2(src, scale)
    return laplace_algo1(src, scale)


def gaussian(
    src: EntropySource,
    sigma: RationalParam,
    algo: LaplaceAlgo = AUTO,
    mu: int = 0,
) -> int:
    """Discrete bell-curve sample: Laplace proposal, squared-gap rejection.

    With t = floor(num/den) + 1, propose Y from the Laplace loop at scale
    t, accept with probability e^-((|Y| t den^2 - num^2)^2 / (2 num^2 t^2 den^2)).
    The squares are passed literally, not reduced.
    """
    num, den = sigma.num, sigma.den
    if num < 1:
        raise InvalidParam("sigma must be positive")
    num2 = num * num
    den2 = den * den
    t = num // den + 1
    t_scale = RationalParam(t, 1)
    accept_den = 2 * num2 * t * t * den2
    while True:
        y = laplace(src, t_scale, algo)
        gap = abs(y) * t * den2 - num2
        if bernoulli_exp_neg(src, RationalParam(gap * gap, accept_den)):
            return y + mu


# -- sampler objects ----------------------------------------------------------


class Sampler:
    """Shared batch plumbing; subclasses define sample() and exact_mass()."""

    name: str = ""

    def sample(self, src: EntropySource) -> int:
        raise NotImplementedError

    def _fast_plan(self) -> Optional[Tuple[str, Tuple[int, ...], int]]:
        """(kernel name, kernel args, bytes-per-sample hint), or None."""
        return None

    def sample_many(
        self, src: EntropySource, count: int, engine: str = "auto"
    ) -> np.ndarray:
        if count < 0:
            raise InvalidParam("sample count must be >= 0")
        if engine not in ("auto", "pure", "fast"):
            raise InvalidParam(f"unknown engine {engine!r}")
        plan = self._fast_plan() if engine != "pure" else None
        if plan is not None:
            from . import _fastlane

            kernel, args, hint = plan
            return _fastlane.run_batch(src, kernel, args, count, hint, self.sample)
        if engine == "fast":
            raise InvalidParam(f"{self.name} parameters not eligible for the fast lane")
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            out[i] = self.sample(src)
        return out

    def describe(self) -> dict:
        raise NotImplementedError

    def exact_mass(
        self, halfwidth: Optional[int] = None, precision: Optional[int] = None
    ) -> exactdist.MassFunction:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformSampler(Sampler):
    n: int
    name = "uniform"

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParam("uniform range must be positive")

    def sample(self, src: EntropySource) -> int:
        return uniform(src, self.n)

    def _fast_plan(self):
        if self.n > _FAST_UNIFORM_MAX:
            return None
        nbytes = max(1, ((self.n - 1).bit_length() + 7) // 8)
        return "uniform", (self.n,), 2 * nbytes

    def exact_mass(self, halfwidth=None, precision=None):
        p = Fraction(1, self.n)
        return exactdist.MassFunction({v: p for v in range(self.n)})

    def describe(self) -> dict:
        return {"dist": "uniform", "n": self.n}


@dataclass(frozen=True)
class BernoulliSampler(Sampler):
    p: RationalParam
    name = "bernoulli"

    def __post_init__(self):
        if self.p.num > self.p.den:
            raise InvalidParam("probability numerator exceeds denominator")

    def sample(self, src: EntropySource) -> int:
        return int(bernoulli(src, self.p))

    def _fast_plan(self):
        if self.p.den > _FAST_UNIFORM_MAX:
            return None
        nbytes = max(1, ((self.p.den - 1).bit_length() + 7) // 8)
        return "bernoulli", (self.p.num, self.p.den), 2 * nbytes

    def exact_mass(self, halfwidth=None, precision=None):
        p = self.p.value
        return exactdist.MassFunction({0: 1 - p, 1: p})

    def describe(self) -> dict:
        return {"dist": "bernoulli", "num": self.p.num, "den": self.p.den}


@dataclass(frozen=True)
class BernoulliExpNegSampler(Sampler):
    gamma: RationalParam
    name = "bernoulli-exp-neg"

    def sample(self, src: EntropySource) -> int:
        return int(bernoulli_exp_neg(src, self.gamma))

    def _fast_plan(self):
        if self.gamma.den > _FAST_DEN_MAX or self.gamma.num > _FAST_UNIFORM_MAX:
            return None
        return "exp_neg", (self.gamma.num, self.gamma.den), 6

    def exact_mass(self, halfwidth=None, precision=None):
        accept = exactdist.BigReal.from_fraction(-self.gamma.value, precision).exp()
        return exactdist.MassFunction(
            {0: 1 - accept, 1: accept}, precision=accept.precision
        )

    def describe(self) -> dict:
        return {"dist": "bernoulli-exp-neg", "num": self.gamma.num, "den": self.gamma.den}


@dataclass(frozen=True)
class GeometricSampler(Sampler):
    """Trials of a Bernoulli(num/den) coin up to the first failure."""

    p: RationalParam
    name = "geometric"

    def __post_init__(self):
        if self.p.value >= 1:
            raise InvalidParam("trial success probability must be < 1")

    def sample(self, src: EntropySource) -> int:
        return geometric(src, lambda s: bernoulli(s, self.p))

    def _fast_plan(self):
        if self.p.den > _FAST_UNIFORM_MAX:
            return None
        nbytes = max(1, ((self.p.den - 1).bit_length() + 7) // 8)
        mean_trials = 1 + 8  # crude cap; the driver refills as needed
        return "geometric", (self.p.num, self.p.den), 2 * nbytes * mean_trials

    def exact_mass(self, halfwidth=None, precision=None):
        p = self.p.value
        if p == 0:
            return exactdist.MassFunction({1: Fraction(1)})
        if halfwidth is None:
            halfwidth = 1 + int(-64 / math.log2(float(p)))
        masses = {}
        cur = 1 - p
        for k in range(1, halfwidth + 1):
            masses[k] = cur
            cur *= p
        return exactdist.MassFunction(masses, tail_bound=p**halfwidth)

    def describe(self) -> dict:
        return {"dist": "geometric", "num": self.p.num, "den": self.p.den}


@dataclass(frozen=True)
class LaplaceSampler(Sampler):
    scale: RationalParam
    algo: LaplaceAlgo = AUTO
    name = "laplace"

    def __post_init__(self):
        if self.scale.num < 1:
            raise InvalidParam("scale must be positive")

    def sample(self, src: EntropySource) -> int:
        return laplace(src, self.scale, self.algo)

    def _fast_plan(self):
        num, den = self.scale.num, self.scale.den
        if num > _FAST_DEN_MAX or den > _FAST_DEN_MAX:
            return None
        use_algo2 = self.algo.resolve(self.scale.value) == "algo2"
        if use_algo2:
            hint = 3 * max(1, ((num - 1).bit_length() + 7) // 8) + 12
        else:
            hint = 8 + 6 * (num // den + 1)
        return "laplace", (num, den, int(use_algo2)), hint

    def exact_mass(self, halfwidth=None, precision=None):
        return exactdist.laplace_mass_function(
            self.scale.value, halfwidth=halfwidth, precision=precision
        )

    def describe(self) -> dict:
        return {
            "dist": "laplace",
            "num": self.scale.num,
            "den": self.scale.den,
            "algo": self.algo.choice,
        }


@dataclass(frozen=True)
class GaussianSampler(Sampler):
    sigma: RationalParam
    mu: int = 0
    algo: LaplaceAlgo = AUTO
    name = "gaussian"

    def __post_init__(self):
        if self.sigma.num < 1:
            raise InvalidParam("sigma must be positive")

    def sample(self, src: EntropySource) -> int:
        return gaussian(src, self.sigma, self.algo, self.mu)

    def _fast_plan(self):
        num, den = self.sigma.num, self.sigma.den
        num2, den2 = num * num, den * den
        t = num // den + 1
        accept_den = 2 * num2 * t * t * den2
        if accept_den > _FAST_UNIFORM_MAX:
            return None
        # Keep the rejection exponent's numerator within int64: |gap| below
        # 2^31 so gap^2 stays below 2^62.
        ybound = ((1 << 31) - 1 - num2) // (t * den2)
        if ybound < 1:
            return None
        use_algo2 = self.algo.resolve(Fraction(t)) == "algo2"
        hint = 4 * (8 + 6 * t if not use_algo2 else 20) + 16
        return (
            "gaussian",
            (num2, den2, t, accept_den, ybound, int(use_algo2), self.mu),
            hint,
        )

    def exact_mass(self, halfwidth=None, precision=None):
        return exactdist.gaussian_mass_function(
            self.sigma.value, mu=self.mu, halfwidth=halfwidth, precision=precision
        )

    def describe(self) -> dict:
        return {
            "dist": "gaussian",
            "num": self.sigma.num,
            "den": self.sigma.den,
            "mu": self.mu,
            "algo": self.algo.choice,
        }


def sampler_from_config(
    dist: str,
    num: int = 1,
    den: int = 1,
    mu: int = 0,
    algo: LaplaceAlgo = AUTO,
) -> Sampler:
    """Build a sampler from CLI-style parameters."""
    dist = dist.strip().lower()
    if dist == "uniform":
        return UniformSampler(den)
    if dist == "bernoulli":
        return BernoulliSampler(RationalParam(num, den))
    if dist == "bernoulli-exp-neg":
        return BernoulliExpNegSampler(RationalParam(num, den))
    if dist == "geometric":
        return GeometricSampler(RationalParam(num, den))
    if dist == "laplace":
        return LaplaceSampler(RationalParam(num, den), algo)
    if dist == "gaussian":
        return GaussianSampler(RationalParam(num, den), mu, algo)
    raise InvalidParam(f"unknown distribution {dist!r}")
