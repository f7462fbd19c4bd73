"""Finite-cut unrolling of probabilistic loops, with exact rational masses.

A LoopSpec describes a guarded loop: starting from `init`, while
`guard(state)` holds, one kernel step replaces the state by a finite
sub-distribution over successor states. `loop_unroll(spec, cut)` computes
the exact sub-distribution over guard-false states reachable within `cut`
guarded iterations: the executable counterpart of truncating a loop's
semantics at a finite depth.

Cut semantics: cut 0 is the zero mass function. With cut n+1, a
guard-false state terminalizes immediately, and a guard-true state spends
one kernel step and continues with cut n. Consequently a terminal state
first reached after exactly k kernel steps carries its mass for every
cut >= k+1, and the loop's true distribution is the pointwise supremum
over cuts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any, Callable, Dict, Sequence, Tuple

from ..errors import InvalidParam, StateExplosion
from ._mass import MassFunction, mass_upper

Kernel = Callable[[Any], Sequence[Tuple[Any, Fraction]]]

DEFAULT_STATE_CAP = 10**6


@dataclass(frozen=True)
class LoopSpec:
    """Guarded probabilistic loop with exact rational transition masses."""

    init: Any
    guard: Callable[[Any], bool]
    kernel: Kernel
    description: str = ""


def loop_unroll(
    spec: LoopSpec, cut: int, state_cap: int = DEFAULT_STATE_CAP
) -> MassFunction:
    """Exact masses of terminal states reachable within `cut` iterations.

    Returns a MassFunction over guard-false states; its tail bound is the
    mass still alive (or lost to sub-stochastic kernels) at the cut, so
    listed mass plus tail is always exactly 1.
    """
    if cut < 0:
        raise InvalidParam("cut must be a natural number")
    terminal: Dict[Any, Fraction] = {}
    alive: Dict[Any, Fraction] = {}
    if cut > 0:
        if spec.guard(spec.init):
            alive[spec.init] = Fraction(1)
        else:
            terminal[spec.init] = Fraction(1)
    for _ in range(cut - 1):
        if not alive:
            break
        step: Dict[Any, Fraction] = {}
        for state, mass in alive.items():
            outcomes = spec.kernel(state)
            out_total = Fraction(0)
            for nxt, p in outcomes:
                if not isinstance(p, Rational):
                    raise InvalidParam("kernel masses must be exact rationals")
                if p < 0:
                    raise InvalidParam("negative kernel mass")
                out_total += p
                if p == 0:
                    continue
                bucket = step if spec.guard(nxt) else terminal
                bucket[nxt] = bucket.get(nxt, Fraction(0)) + mass * p
            if out_total > 1:
                raise InvalidParam("kernel masses exceed 1")
        alive = step
        if len(alive) + len(terminal) > state_cap:
            raise StateExplosion(
                f"more than {state_cap} states at cut {cut} ({spec.description})"
            )
    pending = 1 - sum(terminal.values(), Fraction(0))
    return MassFunction(terminal, tail_bound=pending)


# -- spec builders for the loops this package actually runs ---------------


def uniform_rejection_spec(n: int) -> LoopSpec:
    """One kernel step = one masked-block rejection round of uniform(n)."""
    if n < 1:
        raise InvalidParam("uniform range must be positive")
    bits = (n - 1).bit_length()
    window = 1 << bits
    start = ("reject",)
    accept = Fraction(1, window)

    def kernel(state):
        outcomes = [(v, accept) for v in range(n)]
        if window > n:
            outcomes.append((start, Fraction(window - n, window)))
        return outcomes

    return LoopSpec(
        init=start,
        guard=lambda s: s == start,
        kernel=kernel,
        description=f"uniform({n}) rejection",
    )


def geometric_trial_spec(p: Fraction) -> LoopSpec:
    """Trial-counting loop: state (still_running, count), init (True, 0).

    Each step draws a trial that succeeds with probability p; the loop
    exits on the first failure, so terminal states are (False, k) with
    mass p^(k-1)(1-p).
    """
    p = Fraction(p)
    if not 0 <= p < 1:
        raise InvalidParam("trial success probability must lie in [0, 1)")

    def kernel(state):
        _, count = state
        return [((True, count + 1), p), ((False, count + 1), 1 - p)]

    return LoopSpec(
        init=(True, 0),
        guard=lambda s: s[0],
        kernel=kernel,
        description=f"geometric trials p={p}",
    )


_UNTIL_START = ("start",)


def until_spec(body: Sequence[Tuple[Any, Fraction]], accept: Callable[[Any], bool]) -> LoopSpec:
    """Resample `body` until `accept`; terminal states are accepted values.

    The initial body draw counts as the first kernel step, so masses at
    cut k equal the conditioned distribution scaled by the probability of
    accepting within k-1 resamples.
    """
    outcomes = [(v, Fraction(p)) for v, p in body]

    def guard(state):
        return state == _UNTIL_START or not accept(state)

    return LoopSpec(
        init=_UNTIL_START,
        guard=guard,
        kernel=lambda state: outcomes,
        description="until",
    )


def exp_neg_unit_trial_spec(gamma: Fraction) -> LoopSpec:
    """Alternating-parity loop deciding a Bernoulli(e^-gamma) trial, gamma <= 1.

    State ("run", k) continues with probability gamma/k; terminal
    ("done", k) means the loop exited at counter k, and the trial reports
    true exactly when k is odd.
    """
    gamma = Fraction(gamma)
    if not 0 <= gamma <= 1:
        raise InvalidParam("unit trial needs gamma in [0, 1]")

    def kernel(state):
        _, k = state
        cont = gamma / k
        return [(("run", k + 1), cont), (("done", k), 1 - cont)]

    return LoopSpec(
        init=("run", 1),
        guard=lambda s: s[0] == "run",
        kernel=kernel,
        description=f"exp-neg unit trial gamma={gamma}",
    )


def exp_neg_accept_mass(gamma: Fraction, cut: int) -> Tuple[Fraction, Fraction]:
    """Exact bounds [lo, lo+pending] on the acceptance mass of the unit trial."""
    unrolled = loop_unroll(exp_neg_unit_trial_spec(gamma), cut)
    accepted = sum(
        (m for (_, k), m in unrolled.masses.items() if k % 2 == 1), Fraction(0)
    )
    return accepted, mass_upper(unrolled.tail_bound)
