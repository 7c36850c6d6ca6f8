"""
Statistical and end-to-end checks of the solver's headline properties.

Most of these run for seconds to minutes; deselect them with ``-m "not slow"``.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import csv

import numpy as np
import pytest
import scipy.linalg

from kalman_sgd.baselines import best_result, default_grid, grid_search
from kalman_sgd.bench import TRACE_HEADER, monte_carlo_covariance
from kalman_sgd.bench.cli import main
from kalman_sgd.core import (
    Observation,
    SnapshotCadence,
    TraceRecorder,
    init_state,
    inverse_covariance_oracle,
    ksgd_step,
    run_stream,
)
from kalman_sgd.data import (
    closed_form_Q,
    condition_profile_for,
    generate,
    generate_dataset,
    make_spec,
)
from kalman_sgd.models import GnConfig, excess_risk, gn_logistic_fit, newton_logistic
from kalman_sgd.tuning import AdaptiveParams, AdaptiveSoftThreshold, Fixed, Scheduled


@pytest.mark.slow
def test_recursion_matches_direct_inversion_on_random_streams():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 11))
        k = int(rng.integers(1, 201))
        stream = [Observation(rng.standard_normal(n), rng.standard_normal()) for _ in range(k)]
        gammas = 10.0 ** rng.uniform(-4, 4, size=k)
        state = init_state(n)
        for obs, g in zip(stream, gammas):
            state, _ = ksgd_step(state, obs, g)
        oracle = inverse_covariance_oracle(stream, gammas)
        assert np.linalg.norm(state.cov - oracle, 2) <= 1e-8 * np.linalg.norm(oracle, 2)


@pytest.mark.slow
def test_noiseless_error_is_the_propagated_prior():
    rng = np.random.default_rng(7)
    for seed in range(20):
        n = int(rng.integers(1, 11))
        spec = make_spec(n, sigma2=0.0, seed=seed)
        beta0 = 3.0 * rng.standard_normal(n)
        state = init_state(n, beta0=beta0)
        for obs in generate(spec, 100):
            state, _ = ksgd_step(state, obs, 1.0)
            expected = state.cov @ (beta0 - spec.beta_star)
            assert np.max(np.abs(state.beta - spec.beta_star - expected)) <= 1e-8


@pytest.mark.slow
def test_covariance_concentrates_around_scaled_inverse_second_moment():
    k, gamma2 = 50_000, 1.0
    root = scipy.linalg.sqrtm(closed_form_Q(make_spec(5))).real
    within = 0
    for seed in range(20):
        spec = make_spec(5, seed=100 + seed)
        state, _ = run_stream(generate(spec, k), Fixed(gamma2), 1e-12, n=5)
        scaled = (k / gamma2) * root @ state.cov @ root
        within += np.linalg.norm(scaled - np.eye(5), 2) <= 0.15
    assert within >= 18


@pytest.mark.slow
def test_excess_risk_decays_at_the_optimal_rate():
    n, sigma2 = 5, 1.0
    spec = make_spec(n, sigma2=sigma2, seed=41)
    points = [5000, 10_000, 20_000]
    result = monte_carlo_covariance(spec, Fixed(sigma2), 100, points, seed=9)
    for k in points:
        rate = n * sigma2 / k
        assert 0.7 * rate <= result.at(k).excess_risk <= 1.3 * rate


@pytest.mark.slow
def test_covariance_sandwich_at_optimal_tuning():
    spec = make_spec(5, sigma2=1.0, seed=12)
    matched = monte_carlo_covariance(spec, Fixed(1.0), 500, [5000], seed=3).at(5000)
    assert 0.7 <= matched.trace_ratio <= 1.3

    # an oversized gamma2 keeps the prior term large, so the ratio only has a floor
    oversized = monte_carlo_covariance(spec, Fixed(100.0), 500, [5000], seed=3).at(5000)
    assert oversized.trace_ratio >= 0.7


@pytest.mark.slow
@pytest.mark.parametrize(
    "m0_scale,beta_star,sgd_factor",
    [
        (1.0, None, 0.5),
        # A diffuse prior removes the bias left in directions the stream barely excites.
        (1e6, 10.0, 0.1),
    ],
)
def test_ksgd_is_insensitive_to_conditioning(m0_scale, beta_star, sgd_factor):
    n, count = 10, 100_000
    spec = make_spec(n, beta_star=None if beta_star is None else np.full(n, beta_star), sigma2=1.0,
                     condition_profile=condition_profile_for(n, 1e6), seed=77)
    data = generate_dataset(spec, count)
    Q = closed_form_Q(spec)

    state, _ = run_stream(data, Fixed(1.0), 1e-300, initial=init_state(n, m0_scale=m0_scale))
    ksgd_excess = excess_risk(state.beta, spec.beta_star, Q)
    assert ksgd_excess <= 3.0 * n * spec.sigma2 / count

    results = grid_search(data.X, data.y, default_grid(), objective=lambda b: excess_risk(b, spec.beta_star, Q))
    sgd_excess = best_result(results).objective
    assert ksgd_excess <= sgd_factor * sgd_excess


def _until_estimates(strategy, source, count):
    for obs in source:
        if strategy.params.count >= count:
            return
        yield obs


@pytest.mark.slow
def test_adaptive_estimate_settles_on_the_noise_variance():
    n, lower, upper = 5, 1.0, 500.0
    settled = 0
    for seed in range(20):
        spec = make_spec(n, sigma2=100.0, seed=500 + seed)
        strategy = AdaptiveSoftThreshold(
            AdaptiveParams(lower=lower, upper=upper, threshold=10.0, delay_trace=0.1 * n)
        )
        recorder = TraceRecorder("ksgd", SnapshotCadence(stride=1, geometric=False), keep_beta=False)
        run_stream(_until_estimates(strategy, generate(spec, 200_000), 10_000), strategy, 1e-12,
                   n=n, recorder=recorder)
        assert strategy.triggered
        assert strategy.params.count == 10_000
        gammas = [r.gamma2 for r in recorder.trace if r.gamma2 is not None]
        assert all(lower <= g <= upper for g in gammas)
        settled += 90.0 <= strategy.params.xi2 <= 110.0
    assert settled >= 18


@pytest.mark.slow
@pytest.mark.parametrize(
    "m0_scale,beta_star,floor",
    [
        (1.0, None, 0.05),
        # A tight prior keeps the noise of the first observations small next to the start error.
        (0.1, 10.0, 0.5),
    ],
)
def test_growing_gamma_never_reaches_the_true_parameter(m0_scale, beta_star, floor):
    n = 5
    spec = make_spec(n, beta_star=None if beta_star is None else np.full(n, beta_star), sigma2=1.0, seed=8)
    start = np.linalg.norm(spec.beta_star)
    ratios = []

    def track(record):
        ratios.append(np.linalg.norm(record.beta - spec.beta_star) / start)

    recorder = TraceRecorder("ksgd", SnapshotCadence(stride=1, geometric=False), sink=track)
    run_stream(generate(spec, 100_000), Scheduled(lambda k: float(k * k)), 1e-300,
               initial=init_state(n, m0_scale=m0_scale), recorder=recorder)
    assert len(ratios) == 100_001
    assert min(ratios) >= floor


@pytest.mark.slow
def test_gauss_newton_matches_newton_on_large_logistic_data():
    spec = make_spec(5, response="logistic", seed=19)
    data = generate_dataset(spec, 100_000)
    newton = newton_logistic(data.X, data.y)
    assert newton.grad_norm <= 1e-10
    beta, _ = gn_logistic_fit(data, GnConfig(), n=5)
    assert np.linalg.norm(beta - newton.beta) <= 0.1


def _trace_rows(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], [row[:2] + row[3:] for row in rows[1:]], [row[2] for row in rows[1:]]


def test_identical_seeds_give_identical_traces(tmp_path):
    args = ["run", "--n", "4", "--count", "2000", "--seed", "5", "--replications", "2",
            "--ksgd-tuning", "fixed,decay", "--log-level", "ERROR"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0

    first = sorted((tmp_path / "a" / "traces").iterdir())
    second = sorted((tmp_path / "b" / "traces").iterdir())
    assert [p.name for p in first] == [p.name for p in second]
    assert len(first) == 8
    for a, b in zip(first, second):
        header_a, values_a, walls_a = _trace_rows(a)
        header_b, values_b, walls_b = _trace_rows(b)
        assert ",".join(header_a) == "method,adp,wall_seconds,objective,trace_M,gamma2"
        assert tuple(header_b) == TRACE_HEADER
        assert values_a == values_b
        assert len(walls_a) == len(walls_b)
        assert all(float(w) >= 0.0 for w in walls_a)
