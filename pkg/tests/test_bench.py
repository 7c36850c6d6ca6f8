import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import csv
import json

import numpy as np
import pytest
import yaml
from numpy.testing import assert_allclose, assert_array_equal

from kalman_sgd.bench import (
    ExperimentConfig,
    ExperimentResult,
    SUMMARY_COLUMNS,
    TRACE_HEADER,
    default_snapshots,
    emit_outputs,
    flop_proxy,
    ksgd_labels,
    monte_carlo_covariance,
    replication_seed,
    run_experiment,
)
from kalman_sgd.bench.cli import main
from kalman_sgd.config import BenchConfig
from kalman_sgd.core import RunTrace, TraceRecord, run_stream
from kalman_sgd.data import CsvDataset, generate, generate_arrays, make_spec, write_observations
from kalman_sgd.errors import ConfigError, ParameterError, UnsupportedError, UsageError
from kalman_sgd.tuning import AdaptiveParams, AdaptiveSoftThreshold, Fixed


def experiment(*args):
    cfg = BenchConfig().load(cli_args=list(args), env={})
    return ExperimentConfig.from_values(cfg.values, config_hash=cfg.config_hash())


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


# ---------- settings ----------

def test_replication_seeds_are_stable_and_distinct():
    assert replication_seed(0, 1) == replication_seed(0, 1)
    assert len({replication_seed(0, r) for r in range(10)}) == 10
    assert replication_seed(0, 1) != replication_seed(1, 1)


def test_settings_from_values():
    exp = experiment("--n", "3", "--ksgd-tuning", "fixed,adaptive", "--sgd-grid-p", "0.5,1")
    assert exp.dimension == 3
    assert_array_equal(exp.beta_star, [1.0, -1.0, 1.0])
    assert exp.methods == ("ksgd", "sgd", "oracle")
    assert len(exp.sgd_schedules) == 2 * 4 * 2 * 2
    assert ksgd_labels(exp) == [("ksgd-fixed", "fixed"), ("ksgd-adaptive", "adaptive")]
    assert isinstance(exp.strategy("adaptive"), AdaptiveSoftThreshold)
    assert exp.config_hash


@pytest.mark.parametrize(
    "args",
    [
        ["--eps", "0"],
        ["--methods", "gn_logistic"],
        ["--problem", "logistic"],
        ["--replications", "0"],
        ["--n", "3", "--beta0", "1,2"],
        ["--n", "3", "--beta-star", "1,2"],
        ["--data-source", "csv"],
        ["--sgd-p", "0.2"],
    ],
)
def test_inconsistent_settings_are_config_errors(args):
    with pytest.raises(ConfigError):
        experiment(*args)


def test_replications_draw_different_data():
    exp = experiment("--n", "2", "--count", "50")
    first, second = exp.dataset(0), exp.dataset(1)
    assert not np.array_equal(first.X, second.X)
    assert_array_equal(first.X, exp.dataset(0).X)


def test_flop_proxy():
    assert flop_proxy("ksgd", 5, 10) == 1550.0
    assert flop_proxy("ksgd-adaptive", 5, 10) == 1550.0
    assert flop_proxy("sgd", 5, 10) == 200.0
    assert flop_proxy("oracle_qr", 2, 1) == 54.0
    assert flop_proxy("oracle", 5, 10) is None


# ---------- experiments ----------

def test_ksgd_is_close_to_the_oracle():
    result = run_experiment(experiment("--n", "5", "--count", "10000", "--seed", "3"))
    ksgd, = result.rows_for("ksgd")
    oracle, = result.rows_for("oracle")
    assert ksgd.status == oracle.status == "ok"
    assert oracle.objective <= ksgd.objective <= 1.05 * oracle.objective
    assert ksgd.excess_objective == pytest.approx(ksgd.objective - oracle.objective)
    assert ksgd.adp == 10000
    assert ksgd.flop_proxy == flop_proxy("ksgd", 5, 10000)
    assert ksgd.error_sq < 0.01
    assert oracle.converged


def test_large_eps_converges_before_reading():
    result = run_experiment(experiment("--n", "5", "--count", "100", "--eps", "5", "--methods", "ksgd"))
    row, = result.summary
    assert row.converged
    assert row.adp == 0
    assert row.trace_M == pytest.approx(5.0)
    (_, trace), = result.traces
    assert [r.adp for r in trace] == [0]


def test_experiment_is_deterministic():
    args = ("--n", "3", "--count", "400", "--replications", "2", "--seed", "11")
    first, second = run_experiment(experiment(*args)), run_experiment(experiment(*args))
    assert [r.objective for r in first.summary] == [r.objective for r in second.summary]
    for (r1, t1), (r2, t2) in zip(first.traces, second.traces):
        assert r1 == r2
        assert [x.objective for x in t1] == [x.objective for x in t2]
    ksgd = first.rows_for("ksgd")
    assert ksgd[0].objective != ksgd[1].objective


def test_worker_pool_keeps_replication_order():
    args = ("--n", "2", "--count", "200", "--replications", "3", "--methods", "ksgd,oracle")
    serial = run_experiment(experiment(*args))
    pooled = run_experiment(experiment(*args, "--workers", "2"))
    assert [(r.method, r.replication, r.objective) for r in serial.summary] == \
           [(r.method, r.replication, r.objective) for r in pooled.summary]


def test_failed_method_does_not_stop_the_others():
    exp = experiment("--n", "3", "--count", "500", "--sgd-c1", "1e200", "--sgd-c2", "inf")
    result = run_experiment(exp)
    sgd, = result.rows_for("sgd")
    assert sgd.status == "failed"
    assert sgd.objective is None
    assert result.rows_for("ksgd")[0].status == "ok"
    assert {t.method for _, t in result.traces} == {"ksgd", "oracle"}


def test_sgd_grid_choice_feeds_the_sgd_run():
    exp = experiment("--n", "3", "--count", "1000", "--methods", "sgd,oracle", "--sgd-grid",
                     "--sgd-grid-p", "1", "--sgd-grid-c1", "0", "--sgd-grid-c2", "0", "--sgd-grid-c3", "1e-4,1")
    trace = next(t for _, t in run_experiment(exp).traces if t.method == "sgd")
    assert trace.method == "sgd"
    assert trace.meta["schedule"]["c3"] == 1.0


def test_logistic_experiment():
    exp = experiment("--problem", "logistic", "--methods", "gn_logistic,oracle", "--n", "3", "--count", "2000")
    result = run_experiment(exp)
    gn, = result.rows_for("gn_logistic")
    oracle, = result.rows_for("oracle")
    assert gn.status == "ok"
    assert gn.excess_objective >= -1e-9
    assert gn.excess_objective < 0.01
    assert oracle.flop_proxy is None
    assert gn.error_sq is not None
    assert gn.risk_proxy is None


def test_csv_source_runs_every_replication_on_the_same_file(tmp_path):
    X, y = generate_arrays(make_spec(2, seed=4), 300)
    path = tmp_path / "data.csv"
    write_observations(path, zip(X, y))
    exp = experiment("--data-source", "csv", "--csv-path", str(path), "--csv-features", "f0,f1",
                     "--replications", "2", "--methods", "ksgd,oracle")
    assert isinstance(exp.dataset(0), CsvDataset)
    result = run_experiment(exp)
    ksgd = result.rows_for("ksgd")
    assert ksgd[0].objective == ksgd[1].objective
    assert ksgd[0].error_sq is None
    assert ksgd[0].risk_proxy is None


def test_error_summaries_of_a_ksgd_run():
    exp = experiment("--n", "5", "--count", "10000", "--seed", "3", "--methods", "ksgd,sgd")
    result = run_experiment(exp)
    ksgd, = result.rows_for("ksgd")
    sgd, = result.rows_for("sgd")
    trace = next(t for _, t in result.traces if t.method == "ksgd")
    diff = trace.final.beta - exp.beta_star
    assert ksgd.error_sq == float(diff @ diff)
    # M is close to (gamma2 / k) Q*^-1 here, so the proxy is close to n sigma2 / k.
    assert 0.8 * 5 / 10000 <= ksgd.risk_proxy <= 1.2 * 5 / 10000
    assert trace.meta["risk_proxy"] == ksgd.risk_proxy
    assert sgd.error_sq is not None and sgd.risk_proxy is None
    assert {"error_sq", "risk_proxy"} <= set(SUMMARY_COLUMNS)
    assert "error_norm" not in SUMMARY_COLUMNS


# ---------- outputs ----------

def small_result():
    trace = RunTrace(method="ksgd")
    trace.append(TraceRecord(adp=0, wall_seconds=0.0, objective=2.0, trace_M=3.0))
    trace.append(TraceRecord(adp=1, wall_seconds=0.25, objective=None, trace_M=1.5, gamma2=1.0))
    trace.append(TraceRecord(adp=2, wall_seconds=0.5, objective=0.1, trace_M=1.0, gamma2=1.0))
    return ExperimentResult(traces=[(0, trace)])


def test_trace_csv_layout(tmp_path):
    files = emit_outputs(small_result(), tmp_path, config_hash="abc")
    rows = read_csv(tmp_path / "traces" / "ksgd__rep0.csv")
    assert tuple(rows[0]) == TRACE_HEADER
    assert len(rows) == 4
    assert rows[1] == ["ksgd", "0", "0.0", "2.0", "3.0", ""]
    assert rows[2][3] == ""
    assert float(rows[3][3]) == 0.1
    assert files[-1] == tmp_path / "manifest.json"


def test_manifest_records_versions_and_files(tmp_path):
    emit_outputs(small_result(), tmp_path, config_echo={"seed": 1}, config_hash="abc", features_precomputed=True)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_hash"] == "abc"
    assert manifest["config"] == {"seed": 1}
    assert manifest["features_precomputed"] is True
    assert manifest["wall_time_includes_featurization"] is False
    assert set(manifest["versions"]) >= {"kalman_sgd", "numpy", "scipy", "python"}
    assert "config.yaml" in manifest["files"]
    assert yaml.safe_load((tmp_path / "config.yaml").read_text()) == {"seed": 1}


def test_emit_outputs_needs_traces(tmp_path):
    with pytest.raises(UsageError):
        emit_outputs(ExperimentResult(), tmp_path)


def without_column(path, name):
    rows = read_csv(path)
    drop = rows[0].index(name)
    return [row[:drop] + row[drop + 1:] for row in rows]


def test_config_echo_reproduces_the_run(tmp_path):
    cfg = BenchConfig().load(cli_args=["--n", "3", "--count", "500", "--seed", "7", "--ksgd-tuning", "fixed,adaptive"], env={})
    first = ExperimentConfig.from_values(cfg.values, config_hash=cfg.config_hash())
    emit_outputs(run_experiment(first), tmp_path / "first", config_echo=cfg.echo(), config_hash=first.config_hash)

    echo = BenchConfig().load(file_path=tmp_path / "first" / "config.yaml", env={})
    assert echo.config_hash() == cfg.config_hash()
    second = ExperimentConfig.from_values(echo.values, config_hash=echo.config_hash())
    emit_outputs(run_experiment(second), tmp_path / "second", config_echo=echo.echo(), config_hash=second.config_hash)

    names = sorted(p.name for p in (tmp_path / "first" / "traces").glob("*.csv"))
    assert names == sorted(p.name for p in (tmp_path / "second" / "traces").glob("*.csv"))
    assert len(names) == 4
    # Everything but the wall-clock column must match exactly.
    for name in names:
        assert without_column(tmp_path / "first" / "traces" / name, "wall_seconds") == \
               without_column(tmp_path / "second" / "traces" / name, "wall_seconds")
    assert without_column(tmp_path / "first" / "summary.csv", "wall_seconds") == \
           without_column(tmp_path / "second" / "summary.csv", "wall_seconds")


# ---------- Monte-Carlo ----------

def test_default_snapshots():
    assert default_snapshots(10) == [1, 2, 4, 8, 10]
    assert default_snapshots(8) == [1, 2, 4, 8]


def test_noiseless_mc_matches_the_propagated_prior():
    spec = make_spec(3, sigma2=0.0, seed=5)
    beta0 = np.array([3.0, 0.0, -2.0])
    result = monte_carlo_covariance(spec, Fixed(1.0), 4, [0, 10, 200], beta0=beta0, m0_scale=2.0)
    start = result.at(0)
    assert start.gamma2 is None and start.trace_ratio is None
    assert_array_equal(start.M, 2.0 * np.eye(3))
    for k in (0, 10, 200):
        snap = result.at(k)
        assert_allclose(snap.empirical, snap.prior_term, rtol=1e-9, atol=1e-12)


def test_mc_covariance_is_the_stream_covariance():
    spec = make_spec(3, sigma2=1.0, seed=6)
    result = monte_carlo_covariance(spec, Fixed(0.5), 3, [100])
    state, _ = run_stream(generate(spec, 100), Fixed(0.5), 1e-12, n=3)
    assert_allclose(result.at(100).M, state.cov, rtol=1e-13, atol=0)
    assert result.at(100).trace_M == pytest.approx(float(np.trace(state.cov)), rel=1e-13)


def test_mc_validation():
    linear = make_spec(2, seed=1)
    with pytest.raises(UnsupportedError):
        monte_carlo_covariance(make_spec(2, response="logistic"), Fixed(1.0), 2, [4])
    adaptive = AdaptiveSoftThreshold(AdaptiveParams(lower=1.0, upper=10.0, threshold=1.0))
    with pytest.raises(UnsupportedError):
        monte_carlo_covariance(linear, adaptive, 2, [4])
    with pytest.raises(ParameterError):
        monte_carlo_covariance(linear, Fixed(1.0), 0, [4])
    with pytest.raises(ParameterError):
        monte_carlo_covariance(linear, Fixed(1.0), 2, [-1, 4])
    with pytest.raises(KeyError):
        monte_carlo_covariance(linear, Fixed(1.0), 2, [4]).at(3)


# ---------- command line ----------

def test_cli_help_and_unknown_command(capsys):
    assert main([]) == 1
    assert main(["-h"]) == 0
    assert "mc-cov" in capsys.readouterr().out
    assert main(["bogus"]) == 1


def test_cli_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--n", "3", "--count", "300", "--out", str(out), "--log-level", "WARNING"]) == 0
    for method in ("ksgd", "sgd", "oracle"):
        assert tuple(read_csv(out / "traces" / f"{method}__rep0.csv")[0]) == TRACE_HEADER
    summary = read_csv(out / "summary.csv")
    assert len(summary) == 4
    assert summary[0][:3] == ["method", "replication", "status"]
    echo = BenchConfig().load(file_path=out / "config.yaml", env={})
    assert echo["count"] == 300
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == echo.config_hash()


def test_cli_run_reports_failed_methods(tmp_path):
    out = tmp_path / "out"
    code = main(["run", "--n", "2", "--count", "200", "--sgd-c1", "1e200", "--sgd-c2", "inf", "--out", str(out)])
    assert code == 1
    assert (out / "summary.csv").exists()


@pytest.mark.parametrize(
    "args,code",
    [
        (["run", "--eps", "0"], 2),
        (["run", "--no-such-flag"], 2),
        (["run", "--config", "missing.yaml"], 2),
        (["mc-cov", "--problem", "logistic", "--methods", "oracle"], 6),
        (["featurize"], 2),
    ],
)
def test_cli_exit_codes(tmp_path, args, code):
    assert main(args + ["--out", str(tmp_path)]) == code


def test_cli_mc_cov(tmp_path):
    assert main(["mc-cov", "--n", "2", "--count", "64", "--replications", "5", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "mc_cov.csv")
    assert rows[0] == ["k", "trace_M", "trace_empirical", "trace_ratio", "excess_risk"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 4, 8, 16, 32, 64]
    assert (tmp_path / "manifest.json").exists()


def test_cli_featurize(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("u,y\n0.25,1.0\n0.75,2.0\n")
    assert main(["featurize", "--csv-path", str(raw), "--raw-columns", "u", "--wavelet-resolutions", "2",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "features.csv")
    assert rows[0] == ["f0", "f1", "y"]
    assert [float(v) for v in rows[2]] == [-1.0, -1.0, 2.0]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["dimension"] == 2 and manifest["rows"] == 2


def test_cli_featurize_malformed_rows(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("u,y\n0.25,1.0\n1.5,2.0\n0.5,0.0\n")
    args = ["featurize", "--csv-path", str(raw), "--raw-columns", "u", "--wavelet-resolutions", "1",
            "--out", str(tmp_path)]
    assert main(args) == 3
    assert main(args + ["--csv-on-error", "skip"]) == 0
    assert len(read_csv(tmp_path / "features.csv")) == 3
    assert json.loads((tmp_path / "manifest.json").read_text())["skipped"] == 1


def test_cli_grid_sgd(tmp_path):
    args = ["grid-sgd", "--n", "2", "--count", "500", "--sgd-grid-p", "1", "--sgd-grid-c1", "0",
            "--sgd-grid-c2", "0", "--sgd-grid-c3", "0.01,0.5", "--out", str(tmp_path)]
    assert main(args) == 0
    rows = read_csv(tmp_path / "sgd_grid.csv")
    assert rows[0] == ["p", "c1", "c2", "c3", "objective", "status"]
    assert len(rows) == 3
    best = BenchConfig().load(file_path=tmp_path / "sgd_best.yaml", env={})
    assert best["sgd_c3"] in {0.01, 0.5}
