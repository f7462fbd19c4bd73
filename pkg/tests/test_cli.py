"""End-to-end command-line behavior through click's test runner.

Exit code contract: 0 success or audit pass, 1 audit fail, 2 bad usage
or bad data, 3 ledger exhausted.
"""

import json

import pytest
from click.testing import CliRunner

from discretedp.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args))


# -- sample ------------------------------------------------------------------------


def test_sample_degenerate_uniform_prints_zeros(runner):
    res = invoke(runner, "sample", "--dist", "uniform", "--den", "1", "--count", "3")
    assert res.exit_code == 0
    assert res.output == "0\n0\n0\n"


def test_sample_is_deterministic_under_a_seed(runner):
    args = ("sample", "--dist", "laplace", "--num", "2", "--count", "20", "--seed", "7")
    first = invoke(runner, *args)
    second = invoke(runner, *args)
    assert first.exit_code == second.exit_code == 0
    assert first.output == second.output
    other = invoke(runner, *args[:-1], "8")
    assert other.output != first.output


def test_sample_output_is_one_integer_per_line(runner):
    res = invoke(runner, "sample", "--dist", "gaussian", "--num", "2",
                 "--mu", "5", "--count", "10", "--seed", "0")
    values = [int(line) for line in res.output.splitlines()]
    assert len(values) == 10


def test_sample_rejects_unknown_distributions(runner):
    assert invoke(runner, "sample", "--dist", "cauchy").exit_code == 2


def test_sample_rejects_bad_parameters(runner):
    res = invoke(runner, "sample", "--dist", "bernoulli", "--num", "3", "--den", "2")
    assert res.exit_code == 2


# -- audit pmf / two-sample ----------------------------------------------------------


def test_audit_pmf_passes_for_an_honest_sampler(runner):
    res = invoke(runner, "audit", "pmf", "--dist", "laplace", "--num", "1")
    assert res.exit_code == 0
    assert "pass" in res.output


def test_audit_pmf_json_is_machine_readable(runner):
    res = invoke(runner, "audit", "pmf", "--dist", "geometric", "--num", "1",
                 "--den", "2", "--samples", "50000", "--json")
    assert res.exit_code == 0
    blob = json.loads(res.output)
    assert blob["test"] == "gof"
    assert blob["verdict"] == "pass"


def test_audit_pmf_rejects_invalid_parameters(runner):
    res = invoke(runner, "audit", "pmf", "--dist", "bernoulli", "--num", "5", "--den", "2")
    assert res.exit_code == 2


def test_audit_two_sample_agrees_across_algorithms(runner):
    res = invoke(runner, "audit", "two-sample", "--num", "2", "--den", "1",
                 "--samples", "10000", "--seed", "3")
    assert res.exit_code == 0


# -- audit dp / renyi ----------------------------------------------------------------


def test_audit_dp_passes_the_construction_claim(runner):
    res = invoke(runner, "audit", "dp", "--mechanism", "noised-count", "--budget", "1/2")
    assert res.exit_code == 0


def test_audit_dp_fails_an_underclaim_and_names_a_witness(runner):
    res = invoke(runner, "audit", "dp", "--mechanism", "noised-count",
                 "--budget", "1/2", "--epsilon", "1/4", "--json")
    assert res.exit_code == 1
    blob = json.loads(res.output)
    assert blob["verdict"] == "fail"
    assert "db" in blob["witness"] and "db_prime" in blob["witness"]


def test_audit_dp_covers_the_histogram(runner):
    res = invoke(runner, "audit", "dp", "--mechanism", "histogram",
                 "--budget", "1/1", "--bins", "2", "--universe", "0,1", "--maxlen", "1")
    assert res.exit_code == 0


def test_audit_renyi_passes_the_gaussian_claim(runner):
    res = invoke(runner, "audit", "renyi", "--budget", "1/1",
                 "--universe", "0,1", "--maxlen", "2", "--alphas", "3/2,2")
    assert res.exit_code == 0


# -- audit cuts ----------------------------------------------------------------------


def test_audit_cuts_geometric_mass_is_stable(runner):
    res = invoke(runner, "audit", "cuts", "--spec", "geometric", "--point", "3",
                 "--cut", "4", "--extra", "8")
    assert res.exit_code == 0
    assert "1/8" in res.output


def test_audit_cuts_uniform_normalized_third(runner):
    res = invoke(runner, "audit", "cuts", "--spec", "uniform", "--point", "1",
                 "--den", "3", "--cut", "3", "--extra", "6")
    assert res.exit_code == 0
    assert "1/3" in res.output


def test_audit_cuts_fails_a_wrong_expectation(runner):
    res = invoke(runner, "audit", "cuts", "--spec", "geometric", "--point", "2",
                 "--cut", "3", "--extra", "4", "--expected", "1/3")
    assert res.exit_code == 1


# -- bench ---------------------------------------------------------------------------


def test_bench_emits_the_fixed_csv_header(runner):
    res = invoke(runner, "bench", "--dist", "laplace", "--sigma-list", "1",
                 "--algo", "algo2", "--draws", "10000", "--reps", "5")
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert lines[0] == "sigma,algo,ns_per_sample,draws"
    assert len(lines) == 2
    sigma, algo, ns, draws = lines[1].split(",")
    assert sigma == "1" and algo == "algo2" and draws == "10000"
    assert float(ns) > 0


def test_bench_all_covers_every_pair(runner):
    res = invoke(runner, "bench", "--dist", "laplace", "--sigma-list", "1,2",
                 "--algo", "all", "--draws", "10000", "--reps", "5")
    lines = res.output.strip().splitlines()
    assert len(lines) == 1 + 2 * 3
    tags = {line.split(",")[1] for line in lines[1:]}
    assert tags == {"algo1", "algo2", "auto"}


def test_bench_enforces_measurement_floors(runner):
    assert invoke(runner, "bench", "--draws", "5000").exit_code == 2
    assert invoke(runner, "bench", "--reps", "2").exit_code == 2


def test_bench_writes_the_file_when_asked(runner):
    with runner.isolated_filesystem():
        res = invoke(runner, "bench", "--dist", "laplace", "--sigma-list", "1",
                     "--algo", "algo1", "--draws", "10000", "--reps", "5",
                     "--out", "out.csv")
        assert res.exit_code == 0
        with open("out.csv") as f:
            assert f.readline().strip() == "sigma,algo,ns_per_sample,draws"


# -- query ---------------------------------------------------------------------------


DATA = "v,w\n1,a\n2,b\n0,c\n2,d\n1,e\n"


def write_csv(text=DATA, name="data.csv"):
    with open(name, "w") as f:
        f.write(text)


def test_query_count_without_a_ledger_is_one_shot(runner):
    with runner.isolated_filesystem():
        write_csv()
        res = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                     "--query", "count", "--seed", "1")
        assert res.exit_code == 0
        blob = json.loads(res.output)
        assert blob["system"] == "pure"
        assert blob["claimed_budget"] == "1/1"
        assert isinstance(blob["result"], int)


def test_query_ledger_lifecycle_exhausts_at_three(runner):
    with runner.isolated_filesystem():
        write_csv()
        base = ("query", "--csv", "data.csv", "--column", "v", "--query", "count",
                "--budget", "1/2", "--seed", "4", "--ledger", "ledger.json")
        first = invoke(runner, *base, "--init", "1/1")
        assert first.exit_code == 0
        second = invoke(runner, *base)
        assert second.exit_code == 0
        third = invoke(runner, *base)
        assert third.exit_code == 3
        assert "0/1" in third.stderr
        with open("ledger.json") as f:
            ledger = json.load(f)
        assert ledger["system"] == "pure"
        assert ledger["remaining"] == "0/1"
        assert len(ledger["log"]) == 2
        assert all(entry["claimed"] == "1/2" for entry in ledger["log"])


def test_query_ledger_requires_init_for_a_new_file(runner):
    with runner.isolated_filesystem():
        write_csv()
        res = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                     "--query", "count", "--ledger", "missing.json")
        assert res.exit_code == 2


def test_query_ledger_rejects_reinit_and_system_switch(runner):
    with runner.isolated_filesystem():
        write_csv()
        base = ("query", "--csv", "data.csv", "--column", "v", "--query", "count",
                "--budget", "1/4", "--seed", "2", "--ledger", "ledger.json")
        assert invoke(runner, *base, "--init", "2/1").exit_code == 0
        assert invoke(runner, *base, "--init", "2/1").exit_code == 2
        switched = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                          "--query", "count", "--system", "zcdp", "--budget", "1/4",
                          "--seed", "2", "--ledger", "ledger.json")
        assert switched.exit_code == 2


def test_query_zcdp_reports_the_approximate_dp_epsilon(runner):
    with runner.isolated_filesystem():
        write_csv()
        res = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                     "--query", "sum", "--clip", "2", "--system", "zcdp",
                     "--budget", "1/2", "--delta", "1/1000000", "--seed", "5")
        assert res.exit_code == 0
        blob = json.loads(res.output)
        assert blob["claimed_budget"] == "1/8"
        assert float(blob["epsilon_prime"]) > 0


def test_query_histogram_result_has_one_entry_per_bin(runner):
    with runner.isolated_filesystem():
        write_csv()
        res = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                     "--query", "histogram", "--bins", "3", "--seed", "6")
        assert res.exit_code == 0
        blob = json.loads(res.output)
        assert isinstance(blob["result"], list) and len(blob["result"]) == 3


def test_query_svt_is_pure_only(runner):
    with runner.isolated_filesystem():
        write_csv()
        res = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                     "--query", "svt", "--bins", "2", "--threshold", "1",
                     "--system", "zcdp", "--seed", "7")
        assert res.exit_code == 2


def test_query_hard_errors_on_bad_data(runner):
    with runner.isolated_filesystem():
        write_csv("v\n1\nx\n3\n", "bad.csv")
        res = invoke(runner, "query", "--csv", "bad.csv", "--column", "v",
                     "--query", "count", "--seed", "1")
        assert res.exit_code == 2
        write_csv()
        missing = invoke(runner, "query", "--csv", "data.csv", "--column", "zz",
                         "--query", "count", "--seed", "1")
        assert missing.exit_code == 2
        unclipped = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                           "--query", "sum", "--seed", "1")
        assert unclipped.exit_code == 2
        unbinned = invoke(runner, "query", "--csv", "data.csv", "--column", "v",
                          "--query", "histogram", "--seed", "1")
        assert unbinned.exit_code == 2
