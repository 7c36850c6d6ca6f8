from __future__ import annotations

import logging
from typing import Iterable, Optional

from kalman_sgd.core.step import init_state, ksgd_step, should_stop
from kalman_sgd.core.trace import RunTrace, StopReason, TraceRecorder
from kalman_sgd.core.types import KsgdState, Observation
from kalman_sgd.errors import DimensionError, UsageError
from kalman_sgd.tuning import TuningStrategy, next_gamma2


log = logging.getLogger(__name__)


def run_stream(
    source:    Iterable[Observation],
    tuning:    TuningStrategy,
    eps:       float,
    *,
    initial:   Optional[KsgdState] = None,
    n:         Optional[int] = None,
    max_obs:   Optional[int] = None,
    recorder:  Optional[TraceRecorder] = None,
    check_spd: bool = False,
) -> tuple[KsgdState, RunTrace]:
    """
    Run kSGD over a stream until the trace stop condition fires or the
    stream runs out.

    The stop condition ``tr(M) <= eps`` is checked before each observation is
    read, so a state that already satisfies it consumes nothing.

    Parameters:
        source (Iterable[Observation]):
            Observation stream with a consistent dimension.

        tuning (TuningStrategy):
            Strategy owned by this run.

        eps (float):
            Trace tolerance, positive.

        initial (Optional[KsgdState]):
            Starting state. Defaults to ``init_state(n)``.

        n (Optional[int]):
            Dimension, required when `initial` is not given.

        max_obs (Optional[int]):
            Upper bound on observations assimilated.

        recorder (Optional[TraceRecorder]):
            Snapshot collector. Defaults to geometric snapshots.

        check_spd (bool):
            Forwarded to `ksgd_step`.

    Returns:
        tuple[KsgdState, RunTrace]:
            Final state and the trace; ``trace.stop_reason`` tells a converged
            run from an exhausted one.

    Raises:
        UsageError:
            If neither `initial` nor `n` is given.

        DimensionError:
            If an observation does not match the state dimension.

    Since:
        v0.1.0
    """
    if initial is None:
        if n is None:
            raise UsageError('run_stream needs either an initial state or the dimension n')
        initial = init_state(n)
    recorder = recorder or TraceRecorder()

    state = initial
    gamma2: Optional[float] = None
    recorder.start()
    recorder.maybe_record(state.k, state.beta, trace_M=state.trace)

    observations = iter(source)
    while True:
        if should_stop(state, eps):
            reason = StopReason.CONVERGED
            break
        if max_obs is not None and state.k - initial.k >= max_obs:
            reason = StopReason.MAX_OBS
            break
        obs = next(observations, None)
        if obs is None:
            reason = StopReason.EXHAUSTED
            break
        if obs.n != state.n:
            raise DimensionError(f'Observation {state.k + 1} has {obs.n} features, expected {state.n}')

        residual = float(obs.y - state.beta @ obs.x)
        gamma2 = next_gamma2(tuning, state.k, state.trace, residual)
        state, _ = ksgd_step(state, obs, gamma2, check_spd=check_spd)
        recorder.maybe_record(state.k, state.beta, trace_M=state.trace, gamma2=gamma2)

    recorder.maybe_record(state.k, state.beta, trace_M=state.trace, gamma2=gamma2, force=True)
    trace = recorder.trace
    trace.stop_reason = reason
    log.debug('kSGD stream stopped (%s) after %d observations, tr(M)=%.3e', reason.value, state.k, state.trace)
    return state, trace


__all__ = ['run_stream']
