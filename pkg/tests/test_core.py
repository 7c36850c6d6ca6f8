import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from kalman_sgd.core import (
    KsgdState,
    Observation,
    SnapshotCadence,
    StopReason,
    TraceRecord,
    TraceRecorder,
    covariance_update,
    init_state,
    inverse_covariance_oracle,
    ksgd_step,
    run_stream,
    should_stop,
)
from kalman_sgd.data import generate, make_spec
from kalman_sgd.errors import DimensionError, DomainError, NumericalError, ParameterError, UsageError
from kalman_sgd.tuning import AdaptiveParams, AdaptiveSoftThreshold, Fixed


def random_stream(rng, n, k):
    return [Observation(rng.standard_normal(n), rng.standard_normal()) for _ in range(k)]


def test_init_state_defaults():
    state = init_state(2)
    assert_array_equal(state.beta, [0.0, 0.0])
    assert_array_equal(state.cov, np.eye(2))
    assert state.k == 0


def test_init_state_passes_beta0_through():
    state = init_state(1, beta0=[3.0])
    assert_array_equal(state.beta, [3.0])
    assert_array_equal(state.cov, [[1.0]])


@pytest.mark.parametrize("n", [0, -1])
def test_init_state_rejects_nonpositive_dimension(n):
    with pytest.raises(DimensionError):
        init_state(n)


def test_init_state_checks_beta0_length_and_scale():
    with pytest.raises(DimensionError):
        init_state(3, beta0=[1.0, 2.0])
    with pytest.raises(ParameterError):
        init_state(2, m0_scale=0.0)
    assert_array_equal(init_state(2, m0_scale=4.0).cov, 4.0 * np.eye(2))


def test_observation_rejects_nonfinite_values():
    with pytest.raises(DomainError):
        Observation([1.0, np.nan], 0.0)
    with pytest.raises(DomainError):
        Observation([1.0], np.inf)
    with pytest.raises(DimensionError):
        Observation([[1.0]], 0.0)


def test_step_by_hand():
    state, diag = ksgd_step(init_state(1), Observation([1.0], 2.0), 1.0)
    assert diag.denom == pytest.approx(2.0)
    assert diag.residual == pytest.approx(2.0)
    assert_allclose(state.beta, [1.0])
    assert_allclose(state.cov, [[0.5]])
    assert state.k == 1


def test_zero_feature_leaves_state_unchanged():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 4))
    start = KsgdState(beta=rng.standard_normal(4), cov=A @ A.T + np.eye(4), k=7)
    state, diag = ksgd_step(start, Observation(np.zeros(4), 5.0), 0.3)
    assert_array_equal(state.beta, start.beta)
    assert_allclose(state.cov, start.cov, rtol=1e-14)
    assert_array_equal(diag.gain, np.zeros(4))
    assert state.k == 8


def test_step_does_not_modify_input_state():
    start = init_state(3)
    before = start.copy()
    ksgd_step(start, Observation([1.0, 2.0, 3.0], 1.0), 1.0)
    assert_array_equal(start.beta, before.beta)
    assert_array_equal(start.cov, before.cov)


def test_step_validates_gamma_and_dimension():
    state = init_state(2)
    with pytest.raises(ParameterError):
        ksgd_step(state, Observation([1.0, 0.0], 1.0), 0.0)
    with pytest.raises(ParameterError):
        ksgd_step(state, Observation([1.0, 0.0], 1.0), np.inf)
    with pytest.raises(DimensionError):
        ksgd_step(state, Observation([1.0, 0.0, 0.0], 1.0), 1.0)


def test_step_reports_nonfinite_update():
    state = KsgdState(beta=np.zeros(1), cov=np.array([[1e300]]), k=0)
    with pytest.raises(NumericalError):
        ksgd_step(state, Observation([1e300], 1.0), 1.0)


def test_covariance_update_is_symmetric_and_matches_step():
    rng = np.random.default_rng(11)
    state = init_state(5)
    for obs in random_stream(rng, 5, 20):
        expected, gain, denom = covariance_update(state.cov, obs.x, 0.7)
        state, diag = ksgd_step(state, obs, 0.7)
        assert_array_equal(state.cov, expected)
        assert_array_equal(state.cov, state.cov.T)
        assert diag.denom == denom


def test_matches_direct_inversion_for_fixed_gamma():
    rng = np.random.default_rng(0)
    stream = random_stream(rng, 3, 10)
    state = init_state(3)
    for obs in stream:
        state, _ = ksgd_step(state, obs, 2.0)
    X = np.vstack([o.x for o in stream])
    expected = np.linalg.inv(np.eye(3) + X.T @ X / 2.0)
    assert np.linalg.norm(state.cov - expected) <= 1e-10 * np.linalg.norm(expected)


def test_oracle_edge_cases():
    assert_array_equal(inverse_covariance_oracle([], [], n=3), np.eye(3))
    assert_allclose(inverse_covariance_oracle([Observation([1.0], 0.0)], [1.0]), [[0.5]])
    with pytest.raises(DimensionError):
        inverse_covariance_oracle([], [])
    with pytest.raises(DimensionError):
        inverse_covariance_oracle([Observation([1.0], 0.0)], [1.0, 2.0])
    with pytest.raises(ParameterError):
        inverse_covariance_oracle([Observation([1.0], 0.0)], [-1.0])


def test_oracle_matches_recursion_with_varying_gamma():
    rng = np.random.default_rng(5)
    stream = random_stream(rng, 5, 50)
    gammas = 10.0 ** rng.uniform(-2, 2, size=50)
    state = init_state(5)
    for obs, g in zip(stream, gammas):
        state, _ = ksgd_step(state, obs, g)
    oracle = inverse_covariance_oracle(stream, gammas)
    assert np.linalg.norm(state.cov - oracle, 2) <= 1e-9 * np.linalg.norm(oracle, 2)


def test_covariance_spectrum_shrinks_monotonically():
    rng = np.random.default_rng(21)
    stream = random_stream(rng, 4, 300)
    gammas = 10.0 ** rng.uniform(-1, 1, size=300)
    state = init_state(4)
    largest = 1.0
    for obs, g in zip(stream, gammas):
        previous = state.cov
        state, _ = ksgd_step(state, obs, g)
        eigs = np.linalg.eigvalsh(state.cov)
        assert eigs[0] > 0.0
        assert eigs[-1] <= 1.0 + 1e-12
        # Smallest eigenvalue of M^-1 never decreases.
        assert eigs[-1] <= largest * (1.0 + 1e-10)
        largest = eigs[-1]
        assert np.linalg.eigvalsh(previous - state.cov)[0] >= -1e-12


@pytest.mark.parametrize("eps,expected", [(4.0, True), (3.0, True), (1.0, False)])
def test_should_stop_is_inclusive(eps, expected):
    assert should_stop(init_state(3), eps) is expected


def test_should_stop_rejects_nonpositive_eps():
    with pytest.raises(ParameterError):
        should_stop(init_state(3), 0.0)


def test_run_stream_stops_before_reading_when_trace_is_small():
    state, trace = run_stream(iter(generate(make_spec(5), 100)), Fixed(1.0), eps=5.0, n=5)
    assert state.k == 0
    assert trace.stop_reason is StopReason.CONVERGED
    assert [r.adp for r in trace] == [0]


def test_run_stream_noiseless_error_propagation():
    spec = make_spec(5, sigma2=0.0, seed=4)
    beta0 = np.full(5, 2.0)
    state, _ = run_stream(generate(spec, 100), Fixed(1.0), 1e-12, initial=init_state(5, beta0=beta0))
    assert state.k == 100
    assert_allclose(state.beta - spec.beta_star, state.cov @ (beta0 - spec.beta_star), rtol=0, atol=1e-8)


def test_run_stream_stop_reasons():
    spec = make_spec(3, seed=1)
    _, exhausted = run_stream(generate(spec, 50), Fixed(1.0), 1e-12, n=3)
    assert exhausted.stop_reason is StopReason.EXHAUSTED
    assert exhausted.final.adp == 50

    state, capped = run_stream(generate(spec, 50), Fixed(1.0), 1e-12, n=3, max_obs=20)
    assert capped.stop_reason is StopReason.MAX_OBS
    assert state.k == 20

    state, converged = run_stream(generate(spec, 5000), Fixed(1.0), 0.05, n=3)
    assert converged.converged
    assert state.trace <= 0.05
    assert state.k < 5000


def test_run_stream_requires_dimension_and_matching_observations():
    with pytest.raises(UsageError):
        run_stream([], Fixed(1.0), 1.0)
    with pytest.raises(DimensionError):
        run_stream([Observation([1.0, 2.0], 0.0)], Fixed(1.0), 1e-9, n=3)


def test_run_stream_feeds_residuals_to_adaptive_tuning():
    spec = make_spec(3, sigma2=4.0, seed=9)
    strategy = AdaptiveSoftThreshold(AdaptiveParams(lower=0.1, upper=100.0, threshold=10.0))
    recorder = TraceRecorder('ksgd', SnapshotCadence(stride=100))
    _, trace = run_stream(generate(spec, 2000), strategy, 1e-12, n=3, recorder=recorder)
    gammas = [r.gamma2 for r in trace if r.gamma2 is not None]
    assert gammas and all(0.1 <= g <= 100.0 for g in gammas)
    assert strategy.params.count == 2000


def test_trace_snapshots_are_strictly_increasing():
    recorder = TraceRecorder('ksgd', SnapshotCadence(stride=7))
    _, trace = run_stream(generate(make_spec(2), 100), Fixed(1.0), 1e-12, n=2, recorder=recorder)
    adps = [r.adp for r in trace]
    assert adps[0] == 0
    assert adps[-1] == 100
    assert all(a < b for a, b in zip(adps, adps[1:]))
    assert {1, 2, 4, 8, 16, 32, 64, 7, 14, 98} <= set(adps)
    walls = [r.wall_seconds for r in trace]
    assert walls == sorted(walls)
    assert all(r.beta is not None for r in trace)


def test_trace_rejects_non_increasing_adp():
    recorder = TraceRecorder('x')
    recorder.trace.append(TraceRecord(adp=3, wall_seconds=0.5))
    with pytest.raises(ParameterError):
        recorder.trace.append(TraceRecord(adp=3, wall_seconds=0.6))
    recorder.trace.append(TraceRecord(adp=4, wall_seconds=0.1))
    assert recorder.trace.final.wall_seconds == 0.5


def test_cadence_defaults():
    cadence = SnapshotCadence.for_length(10000)
    assert cadence.stride == 50
    assert SnapshotCadence.for_length(10).stride == 1
    assert not cadence.due(0)
    assert cadence.due(64) and cadence.due(150) and not cadence.due(151)
    with pytest.raises(ParameterError):
        SnapshotCadence(stride=-1)
