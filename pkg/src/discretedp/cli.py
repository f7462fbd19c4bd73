"""Command-line surface: sampling, audits, benchmarks, and a budgeted
query runner.

Four commands behind one entry point:

  sample   stream draws from a named distribution, one integer per line
  audit    run a statistical or exact audit; the exit code is the verdict
  bench    time the samplers across scales, CSV to stdout or a file
  query    answer one DP query over a CSV column against a rational ledger

Exit codes: 0 success or audit pass, 1 audit fail, 2 usage or parse error,
3 budget exhausted.  Every command is deterministic under --seed (bench
timings aside).  The environment variable DISCRETE_DP_PRECISION_BITS
overrides the interval working precision process-wide.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import statistics
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Tuple

import click

from . import audit as audits
from . import mechanisms as mech
from . import privacy
from .entropy import EntropySource, OsRandomSource, SeededSource
from .errors import BudgetExhausted, DiscreteDpError, InvalidParam
from .exactdist import geometric_trial_spec, uniform_rejection_spec
from .samplers import (
    ALGO1,
    ALGO2,
    GaussianSampler,
    LaplaceAlgo,
    LaplaceSampler,
    RationalParam,
    sampler_from_config,
)

_DISTS = "uniform | bernoulli | bernoulli-exp-neg | geometric | laplace | gaussian"


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map the package error taxonomy onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BudgetExhausted as exc:
            _fail(3, str(exc))
        except (DiscreteDpError, ValueError, ZeroDivisionError, OSError) as exc:
            _fail(2, str(exc))

    return wrapper


def _fraction(text: str, what: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParam(f"cannot parse {what} {text!r}: {exc}") from None


def _gamma_pair(text: str) -> Tuple[int, int]:
    value = _fraction(text, "budget")
    if value <= 0:
        raise InvalidParam("budget must be positive")
    return value.numerator, value.denominator


def _source(seed: Optional[int]) -> EntropySource:
    return OsRandomSource() if seed is None else SeededSource(seed)


def _universe_of(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise InvalidParam(f"universe must be comma-separated integers, got {text!r}")
    if not values:
        raise InvalidParam("universe must be nonempty")
    return values


def _count_query() -> privacy.Query:
    return privacy.Query(lambda db: len(db), 1, "count")


def _bins_of(n_bins: int) -> mech.Bins:
    """Integer records binned by value, out-of-range clamped to the edges."""
    if n_bins < 1:
        raise InvalidParam("bins must be at least 1")
    return mech.Bins(n_bins, lambda r, n=n_bins: min(max(int(r), 0), n - 1))


def _emit_report(report: audits.AuditReport, as_json: bool) -> None:
    data = report.to_json_dict()
    if as_json:
        click.echo(report.to_json())
    else:
        click.echo(
            f"{data['test']}: {data['verdict']}  statistic={data['statistic']}"
            f"  threshold={data['threshold']}  slack={data['slack']}"
        )
        if data["witness"] is not None:
            click.echo(f"witness: {json.dumps(data['witness'])}")
    sys.exit(0 if report.verdict else 1)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main() -> None:
    """Exact discrete noise samplers, DP mechanisms, and their audits."""


# -- sample ------------------------------------------------------------------


@main.command("sample")
@click.option("--dist", required=True, help=_DISTS)
@click.option("--num", type=int, default=1, show_default=True)
@click.option("--den", type=int, default=1, show_default=True)
@click.option("--mu", type=int, default=0, show_default=True, help="Gaussian center.")
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=None, help="Seeded stream; OS entropy when omitted.")
@click.option("--algo", type=click.Choice(["algo1", "algo2", "auto"]), default="auto", show_default=True)
@_guarded
def cmd_sample(dist: str, num: int, den: int, mu: int, count: int,
               seed: Optional[int], algo: str) -> None:
    """Print COUNT draws, one decimal integer per line."""
    if count < 0:
        raise InvalidParam("count must be nonnegative")
    sampler = sampler_from_config(dist, num, den, mu, LaplaceAlgo(algo))
    values = sampler.sample_many(_source(seed), count)
    if count:
        sys.stdout.write("\n".join(map(str, values.tolist())))
        sys.stdout.write("\n")


# -- audit -------------------------------------------------------------------


@main.group("audit")
def cmd_audit() -> None:
    """Run one audit; exit 0 on pass, 1 on fail, 2 on bad configuration."""


@cmd_audit.command("pmf")
@click.option("--dist", required=True, help=_DISTS)
@click.option("--num", type=int, default=1, show_default=True)
@click.option("--den", type=int, default=1, show_default=True)
@click.option("--mu", type=int, default=0, show_default=True)
@click.option("--samples", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha", default="1/1000", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Full report as JSON.")
@_guarded
def audit_pmf(dist: str, num: int, den: int, mu: int, samples: int,
              seed: int, alpha: str, as_json: bool) -> None:
    """Goodness of fit of sampler output against its exact distribution."""
    sampler = sampler_from_config(dist, num, den, mu)
    oracle = sampler.exact_mass()
    empirical = audits.empirical_pmf(sampler, samples, seed)
    report = audits.gof_test(empirical, oracle, alpha=_fraction(alpha, "alpha"), seed=seed)
    _emit_report(report, as_json)


@cmd_audit.command("two-sample")
@click.option("--num", type=int, default=1, show_default=True, help="Laplace scale numerator.")
@click.option("--den", type=int, default=1, show_default=True, help="Laplace scale denominator.")
@click.option("--samples", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha", default="1/1000", show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_guarded
def audit_two_sample(num: int, den: int, samples: int, seed: int,
                     alpha: str, as_json: bool) -> None:
    """Homogeneity test between the two Laplace loops at one scale."""
    scale = RationalParam(num, den)
    report = audits.two_sample_test(
        LaplaceSampler(scale, ALGO1),
        LaplaceSampler(scale, ALGO2),
        draws=samples,
        seed=seed,
        alpha=_fraction(alpha, "alpha"),
    )
    _emit_report(report, as_json)


def _dp_mechanism(name: str, gamma: Tuple[int, int], universe: Tuple[int, ...],
                  n_bins: int, threshold: int) -> privacy.Mechanism:
    gn, gd = gamma
    if name == "noised-count":
        return privacy.noise(_count_query(), 1, gn, gd, privacy.DpSystem.PURE)
    if name == "histogram":
        return mech.noised_histogram(_bins_of(n_bins), gn, gd, privacy.DpSystem.PURE)
    if name == "svt":
        queries = [mech.exact_bin_count(_bins_of(len(universe)), b)
                   for b in range(len(universe))]
        return mech.sparse_vector(queries, threshold, RationalParam(gn, gd))
    raise InvalidParam(f"unknown mechanism {name!r}")


@cmd_audit.command("dp")
@click.option("--mechanism", type=click.Choice(["noised-count", "histogram", "svt"]),
              default="noised-count", show_default=True)
@click.option("--budget", default="1/2", show_default=True,
              help="Noise parameter pair num/den the mechanism is built with.")
@click.option("--epsilon", default=None,
              help="Pure-DP bound to check; defaults to the mechanism's claim.")
@click.option("--universe", default="0,1,2", show_default=True)
@click.option("--maxlen", type=int, default=3, show_default=True)
@click.option("--bins", type=int, default=2, show_default=True, help="Histogram bin count.")
@click.option("--threshold", type=int, default=1, show_default=True, help="svt threshold.")
@click.option("--slack-tol", default="1/1000000000", show_default=True)
@click.option("--pair-cap", type=int, default=10_000, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_guarded
def audit_dp(mechanism: str, budget: str, epsilon: Optional[str], universe: str,
             maxlen: int, bins: int, threshold: int, slack_tol: str,
             pair_cap: int, as_json: bool) -> None:
    """Exhaustive pointwise e^eps likelihood-ratio audit over a tiny universe."""
    uni = _universe_of(universe)
    built = _dp_mechanism(mechanism, _gamma_pair(budget), uni, bins, threshold)
    eps = built.claimed if epsilon is None else _fraction(epsilon, "epsilon")
    report = audits.dp_ratio_check(
        built, uni, maxlen, eps,
        slack_tol=_fraction(slack_tol, "slack-tol"), pair_cap=pair_cap,
    )
    _emit_report(report, as_json)


@cmd_audit.command("renyi")
@click.option("--budget", default="1/1", show_default=True,
              help="Noise pair num/den; the Gaussian count claims rho = (num/den)^2/2.")
@click.option("--rho", default=None, help="zCDP bound to check; defaults to the claim.")
@click.option("--alphas", default="3/2,2,4,8", show_default=True)
@click.option("--universe", default="0,1,2", show_default=True)
@click.option("--maxlen", type=int, default=3, show_default=True)
@click.option("--slack-tol", default="1/1000000000", show_default=True)
@click.option("--pair-cap", type=int, default=10_000, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_guarded
def audit_renyi(budget: str, rho: Optional[str], alphas: str, universe: str,
                maxlen: int, slack_tol: str, pair_cap: int, as_json: bool) -> None:
    """Renyi-divergence audit of the Gaussian-noised count's zCDP claim."""
    gn, gd = _gamma_pair(budget)
    built = privacy.noise(_count_query(), 1, gn, gd, privacy.DpSystem.ZCDP)
    bound = built.claimed if rho is None else _fraction(rho, "rho")
    alpha_list = [_fraction(tok, "alpha") for tok in alphas.split(",") if tok.strip()]
    if not alpha_list:
        raise InvalidParam("alphas must be nonempty")
    report = audits.renyi_check(
        built, _universe_of(universe), maxlen, bound, alpha_list,
        slack_tol=_fraction(slack_tol, "slack-tol"), pair_cap=pair_cap,
    )
    _emit_report(report, as_json)


@cmd_audit.command("cuts")
@click.option("--spec", "spec_name", type=click.Choice(["geometric", "uniform"]), required=True)
@click.option("--point", type=int, required=True,
              help="Trial count (geometric) or accepted value (uniform).")
@click.option("--cut", type=int, required=True)
@click.option("--extra", type=int, default=0, show_default=True)
@click.option("--num", type=int, default=1, show_default=True,
              help="Trial probability numerator (geometric).")
@click.option("--den", type=int, default=2, show_default=True,
              help="Trial probability denominator (geometric) or range n (uniform).")
@click.option("--expected", default=None,
              help="Exact mass num/den; derived from the parameters when omitted.")
@click.option("--json", "as_json", is_flag=True)
@_guarded
def audit_cuts(spec_name: str, point: int, cut: int, extra: int, num: int,
               den: int, expected: Optional[str], as_json: bool) -> None:
    """Exact stability of one loop-terminal mass across unrolling cuts."""
    if spec_name == "geometric":
        if point < 1:
            raise InvalidParam("geometric trial counts start at 1")
        p = Fraction(num, den)
        spec = geometric_trial_spec(p)
        target: Any = (False, point)
        derived = p ** (point - 1) * (1 - p)
        normalized = False
    else:
        spec = uniform_rejection_spec(den)
        target = point
        derived = Fraction(1, den)
        normalized = True
    want = derived if expected is None else _fraction(expected, "expected")
    report = audits.cut_stability_check(
        spec, target, cut, extra, expected=want, normalized=normalized
    )
    _emit_report(report, as_json)


# -- bench -------------------------------------------------------------------


@main.command("bench")
@click.option("--dist", type=click.Choice(["gaussian", "laplace"]),
              default="gaussian", show_default=True)
@click.option("--sigma-list", default="1,10,100", show_default=True,
              help="Comma-separated scales; integers or num/den rationals.")
@click.option("--algo", type=click.Choice(["algo1", "algo2", "auto", "all"]),
              default="all", show_default=True)
@click.option("--draws", type=int, default=20_000, show_default=True)
@click.option("--reps", type=int, default=5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="CSV destination; stdout when omitted.")
@click.option("--seed", type=int, default=0, show_default=True)
@_guarded
def cmd_bench(dist: str, sigma_list: str, algo: str, draws: int, reps: int,
              out: Optional[str], seed: int) -> None:
    """Median ns-per-sample per (scale, algorithm); CSV with a fixed header."""
    if draws < 10_000:
        raise InvalidParam("draws must be at least 10000")
    if reps < 5:
        raise InvalidParam("reps must be at least 5")
    tokens = [tok.strip() for tok in sigma_list.split(",") if tok.strip()]
    if not tokens:
        raise InvalidParam("sigma list must be nonempty")
    scales = [RationalParam.parse(tok) for tok in tokens]
    algos = ["algo1", "algo2", "auto"] if algo == "all" else [algo]
    rows: List[Tuple[str, str, str, int]] = []
    for scale in scales:
        for tag in algos:
            if dist == "gaussian":
                sampler = GaussianSampler(scale, 0, LaplaceAlgo(tag))
            else:
                sampler = LaplaceSampler(scale, LaplaceAlgo(tag))
            src = SeededSource(seed)
            # Warm-up draw compiles kernels and fills the byte buffer so the
            # timed repetitions see steady state.
            sampler.sample_many(src, min(draws, 4096))
            times = []
            for _ in range(reps):
                start = time.perf_counter_ns()
                sampler.sample_many(src, draws)
                times.append(time.perf_counter_ns() - start)
            ns = statistics.median(times) / draws
            rows.append((format(float(scale.value), "g"), tag, f"{ns:.3f}", draws))
    with click.open_file(out or "-", "w") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["sigma", "algo", "ns_per_sample", "draws"])
        writer.writerows(rows)


# -- query -------------------------------------------------------------------


def _read_column(path: str, column: str) -> Tuple[int, ...]:
    """First row is the header; target cells must parse as integers."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = [name.strip() for name in next(reader)]
        except StopIteration:
            raise InvalidParam(f"{path} is empty") from None
        if column not in header:
            raise InvalidParam(f"column {column!r} not in header {header}")
        index = header.index(column)
        values: List[int] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if index >= len(row):
                raise InvalidParam(f"row {line_no} has no {column!r} cell")
            cell = row[index].strip()
            try:
                values.append(int(cell))
            except ValueError:
                raise InvalidParam(f"row {line_no}: {cell!r} is not an integer") from None
    return tuple(values)


@dataclass
class _Ledger:
    """JSON budget ledger: {system, remaining: "num/den", log: [entries]}.

    Single-writer by assumption; there is no locking.  The file is only
    rewritten after the query ran, so a failed run never charges.
    """

    path: str
    system: str
    remaining: Fraction
    log: List[dict]

    @classmethod
    def load(cls, path: str, system: str, init: Optional[str]) -> "_Ledger":
        if os.path.exists(path):
            if init is not None:
                raise InvalidParam("--init only applies when the ledger does not exist yet")
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
            try:
                found = raw["system"]
                remaining = Fraction(raw["remaining"])
                log = list(raw["log"])
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidParam(f"malformed ledger {path}: {exc}") from None
            if found != system:
                raise InvalidParam(f"ledger tracks {found!r}, query runs under {system!r}")
            return cls(path, system, remaining, log)
        if init is None:
            raise InvalidParam("ledger does not exist; pass --init num/den to create it")
        start = _fraction(init, "init")
        if start < 0:
            raise InvalidParam("initial budget must be nonnegative")
        return cls(path, system, start, [])

    def charge(self, claimed: privacy.Budget, entry: dict) -> None:
        if claimed.value > self.remaining:
            raise BudgetExhausted(
                f"query claims {claimed}, ledger has "
                f"{self.remaining.numerator}/{self.remaining.denominator}"
            )
        self.remaining -= claimed.value
        self.log.append(dict(entry, claimed=str(claimed)))

    def save(self) -> None:
        payload = {
            "system": self.system,
            "remaining": f"{self.remaining.numerator}/{self.remaining.denominator}",
            "log": self.log,
        }
        tmp = f"{self.path}.tmp"
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
        os.replace(tmp, self.path)


def _query_mechanism(kind: str, gn: int, gd: int, system: privacy.DpSystem,
                     clip: Optional[int], bins: Optional[int],
                     threshold: int) -> privacy.Mechanism:
    if kind == "count":
        return privacy.noise(_count_query(), 1, gn, gd, system)
    if kind in ("sum", "mean"):
        if clip is None:
            raise InvalidParam(f"{kind} needs --clip (records are clipped to [0, clip])")
        if kind == "mean":
            return mech.noised_mean(clip, gn, gd, system)
        query = privacy.Query(
            lambda db: sum(mech.clipped(int(r), clip) for r in db),
            clip,
            f"clipped_sum[0,{clip}]",
        )
        return privacy.noise(query, clip, gn, gd, system)
    if kind in ("histogram", "max", "svt"):
        if bins is None:
            raise InvalidParam(f"{kind} needs --bins")
        binning = _bins_of(bins)
        if kind == "histogram":
            return mech.noised_histogram(binning, gn, gd, system)
        if kind == "max":
            return mech.approx_max(binning, None, gn, gd, system)
        if system is not privacy.DpSystem.PURE:
            raise InvalidParam("svt accounts under pure DP only")
        queries = [mech.exact_bin_count(binning, b) for b in range(bins)]
        return mech.sparse_vector(queries, threshold, RationalParam(gn, gd))
    raise InvalidParam(f"unknown query {kind!r}")


def _jsonable(result: Any) -> Any:
    if isinstance(result, mech.HistogramResult):
        return [int(c) for c in result]
    if isinstance(result, tuple):
        return [_jsonable(v) for v in result]
    return result


@main.command("query")
@click.option("--csv", "csv_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--column", required=True)
@click.option("--query", "kind", required=True,
              type=click.Choice(["count", "sum", "mean", "histogram", "max", "svt"]))
@click.option("--system", type=click.Choice(["pure", "zcdp"]), default="pure",
              show_default=True)
@click.option("--budget", default="1/1", show_default=True,
              help="Noise pair num/den; pure claims num/den, zcdp claims (num/den)^2/2.")
@click.option("--delta", default=None,
              help="Also report the approximate-DP epsilon' at this delta.")
@click.option("--seed", type=int, default=None)
@click.option("--ledger", "ledger_path", type=click.Path(dir_okay=False), default=None)
@click.option("--init", "ledger_init", default=None,
              help="Starting balance num/den when creating a new ledger file.")
@click.option("--clip", type=int, default=None, help="Clip bound for sum and mean.")
@click.option("--bins", type=int, default=None, help="Bin count for histogram, max, svt.")
@click.option("--threshold", type=int, default=0, show_default=True, help="svt threshold.")
@_guarded
def cmd_query(csv_path: str, column: str, kind: str, system: str, budget: str,
              delta: Optional[str], seed: Optional[int], ledger_path: Optional[str],
              ledger_init: Optional[str], clip: Optional[int], bins: Optional[int],
              threshold: int) -> None:
    """Run one DP query over an integer CSV column and update the ledger."""
    database = _read_column(csv_path, column)
    dp_system = privacy.DpSystem(system)
    gn, gd = _gamma_pair(budget)
    built = _query_mechanism(kind, gn, gd, dp_system, clip, bins, threshold)
    ledger = None
    if ledger_path is not None:
        ledger = _Ledger.load(ledger_path, system, ledger_init)
        # Charge before running: an exhausted ledger refuses the query.
        ledger.charge(built.claimed, {"query": kind, "column": column, "seed": seed})
    result = built.run(database, _source(seed))
    payload: dict = {
        "query": kind,
        "result": _jsonable(result),
        "claimed_budget": str(built.claimed),
        "system": system,
    }
    if delta is not None:
        delta_f = _fraction(delta, "delta")
        payload["epsilon_prime"] = privacy.approx_dp_of(
            dp_system, built.claimed, delta_f
        ).approx_str()
    if ledger is not None:
        ledger.save()
    click.echo(json.dumps(payload))


if __name__ == "__main__":
    main()
