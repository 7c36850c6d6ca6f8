"""
First-order SGD baseline with the piecewise learning-rate family

    eta(k) = c1 * 1{k <= c2} + c3 / (k - c2)^p * 1{k > c2}

Classes:
    SgdSchedule
    SgdState
    GridResult

Functions:
    eta
    sgd_step
    run_sgd
    default_grid
    grid_search
    best_result

Since:
    v0.1.0
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from kalman_sgd.core import Observation, RunTrace, StopReason, TraceRecorder
from kalman_sgd.errors import DimensionError, NumericalError, ParameterError, UsageError


log = logging.getLogger(__name__)


@dataclass(slots=True, frozen=True)
class SgdSchedule:
    """
    Learning-rate schedule parameters.

    Parameters:
        p (float):
            Decay exponent in [0.5, 1].

        c1 (float):
            Constant rate during the first `c2` steps, nonnegative.

        c2 (float):
            Length of the constant phase, nonnegative or ``inf``.

        c3 (float):
            Scale of the decaying phase, positive.
    """

    p: float = 1.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 1.0

    def __post_init__(self) -> None:
        if not 0.5 <= self.p <= 1.0:
            raise ParameterError(f'SGD exponent p must lie in [0.5, 1], got {self.p!r}')
        if not (np.isfinite(self.c1) and self.c1 >= 0):
            raise ParameterError(f'c1 must be nonnegative, got {self.c1!r}')
        if not self.c2 >= 0:
            raise ParameterError(f'c2 must be nonnegative or inf, got {self.c2!r}')
        if not (np.isfinite(self.c3) and self.c3 > 0):
            raise ParameterError(f'c3 must be positive, got {self.c3!r}')

    def as_dict(self) -> dict[str, float]:
        return {'p': self.p, 'c1': self.c1, 'c2': self.c2, 'c3': self.c3}


def eta(k: int, sched: SgdSchedule) -> float:
    """
    Learning rate of step `k` (1-based).

    Example Usage:
        >>> eta(5, SgdSchedule(p=0.75, c1=0.01, c2=1e5, c3=1.0))
        0.01
    """
    if k < 1:
        raise ParameterError(f'Step index must be at least 1, got {k}')
    if k <= sched.c2:
        return sched.c1
    return sched.c3 / (k - sched.c2) ** sched.p


def _eta_vector(k: int, p: np.ndarray, c1: np.ndarray, c2: np.ndarray, c3: np.ndarray) -> np.ndarray:
    decaying = k > c2
    out = c1.copy()
    out[decaying] = c3[decaying] / (k - c2[decaying]) ** p[decaying]
    return out


@dataclass(slots=True, frozen=True, eq=False)
class SgdState:
    beta: np.ndarray
    k: int = 0

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=float)
        if not np.all(np.isfinite(beta)):
            raise NumericalError(f'SGD estimate became non-finite at step {self.k}')
        object.__setattr__(self, 'beta', beta)

    @property
    def n(self) -> int:
        return self.beta.shape[0]


def sgd_step(state: SgdState, obs: Observation, sched: SgdSchedule) -> SgdState:
    """
    One SGD step on ``(1/2)(y - beta^T x)^2``: ``beta' = beta + eta(k+1) x (y - beta^T x)``.

    Raises:
        DimensionError:
            On a feature-length mismatch.

        NumericalError:
            If the update is not finite.
    """
    if obs.n != state.n:
        raise DimensionError(f'Observation has {obs.n} features, state has dimension {state.n}')
    residual = obs.y - state.beta @ obs.x
    with np.errstate(over='ignore', invalid='ignore'):
        beta = state.beta + eta(state.k + 1, sched) * residual * obs.x
    return SgdState(beta, state.k + 1)


def run_sgd(
    source:   Iterable[Observation],
    sched:    SgdSchedule,
    *,
    n:        int,
    beta0:    Optional[np.ndarray] = None,
    epochs:   int = 1,
    max_obs:  Optional[int] = None,
    recorder: Optional[TraceRecorder] = None,
) -> tuple[SgdState, RunTrace]:
    """
    Run SGD over `epochs` passes of `source`.

    ADP counts every observation assimilated across all passes.

    Raises:
        UsageError:
            If more than one epoch is requested over a one-shot iterator.
    """
    if epochs < 1:
        raise ParameterError(f'epochs must be at least 1, got {epochs}')
    if epochs > 1 and iter(source) is source:
        raise UsageError('Multiple SGD epochs need a re-iterable dataset')

    state = SgdState(np.zeros(n) if beta0 is None else np.array(beta0, dtype=float))
    recorder = recorder or TraceRecorder(method='sgd')
    recorder.start()
    recorder.maybe_record(0, state.beta)

    reason = StopReason.EXHAUSTED
    for _ in range(epochs):
        for obs in source:
            if max_obs is not None and state.k >= max_obs:
                reason = StopReason.MAX_OBS
                break
            state = sgd_step(state, obs, sched)
            recorder.maybe_record(state.k, state.beta)
        if reason is StopReason.MAX_OBS:
            break

    recorder.maybe_record(state.k, state.beta, force=True)
    trace = recorder.trace
    trace.stop_reason = reason
    trace.meta['schedule'] = sched.as_dict()
    return state, trace


def default_grid() -> list[SgdSchedule]:
    """p in {0.5, 0.75, 1}, c3 in {1e-3, 1e-2, 1e-1, 1}, c1 in {0, 1e-2}, c2 in {0, 1e5}."""
    return [
        SgdSchedule(p=p, c1=c1, c2=c2, c3=c3)
        for p, c3, c1, c2 in itertools.product((0.5, 0.75, 1.0), (1e-3, 1e-2, 1e-1, 1.0), (0.0, 1e-2), (0.0, 1e5))
    ]


@dataclass(slots=True, frozen=True, eq=False)
class GridResult:
    schedule: SgdSchedule
    beta: np.ndarray
    objective: float
    status: str


def _lockstep(
    blocks:    Callable[[], Iterable[tuple[np.ndarray, np.ndarray]]],
    schedules: Sequence[SgdSchedule],
    n:         int,
    epochs:    int,
) -> tuple[np.ndarray, np.ndarray]:
    """Run every schedule over the same stream at once; rows of B are estimates."""
    p  = np.array([s.p for s in schedules])
    c1 = np.array([s.c1 for s in schedules])
    c2 = np.array([s.c2 for s in schedules])
    c3 = np.array([s.c3 for s in schedules])
    B = np.zeros((len(schedules), n))
    alive = np.ones(len(schedules), dtype=bool)

    k = 0
    with np.errstate(over='ignore', invalid='ignore'):
        for _ in range(epochs):
            for X, y in blocks():
                if X.shape[1] != n:
                    raise DimensionError(f'Data has {X.shape[1]} features, expected {n}')
                for x, response in zip(X, y):
                    k += 1
                    rates = _eta_vector(k, p, c1, c2, c3)
                    B += (rates * (response - B @ x))[:, None] * x
                alive &= np.all(np.isfinite(B), axis=1)
                B[~alive] = 0.0
    return B, alive


def _grid_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    X, y, schedules, epochs = args
    return _lockstep(lambda: [(X, y)], schedules, X.shape[1], epochs)


def grid_search(
    X:         np.ndarray,
    y:         np.ndarray,
    schedules: Optional[Sequence[SgdSchedule]] = None,
    *,
    epochs:    int = 1,
    objective: Optional[Callable[[np.ndarray], float]] = None,
    workers:   int = 1,
) -> list[GridResult]:
    """
    Run SGD for each schedule over the same data and score the final estimates.

    Schedules run in lockstep, vectorized across the grid. With
    ``workers > 1`` the grid is split across processes; results keep the
    order of `schedules`.

    Parameters:
        X (np.ndarray), y (np.ndarray):
            The data, streamed in row order.

        schedules (Optional[Sequence[SgdSchedule]]):
            Defaults to `default_grid()`.

        objective (Optional[Callable[[np.ndarray], float]]):
            Score of a final estimate. Defaults to its MRS over the data.

    Returns:
        list[GridResult]:
            One result per schedule; diverged runs have status 'diverged'
            and objective ``inf``.
    """
    schedules = list(schedules) if schedules is not None else default_grid()
    if not schedules:
        raise ParameterError('SGD grid is empty')
    if objective is None:
        def objective(beta: np.ndarray) -> float:
            r = y - X @ beta
            return float(r @ r) / X.shape[0]

    if workers > 1 and len(schedules) > 1:
        size = math.ceil(len(schedules) / workers)
        parts = [schedules[i:i + size] for i in range(0, len(schedules), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_grid_chunk, [(X, y, part, epochs) for part in parts]))
        B = np.vstack([o[0] for o in outputs])
        alive = np.concatenate([o[1] for o in outputs])
    else:
        B, alive = _grid_chunk((X, y, schedules, epochs))

    results = []
    for schedule, beta, ok in zip(schedules, B, alive):
        if ok:
            results.append(GridResult(schedule, beta, float(objective(beta)), 'ok'))
        else:
            results.append(GridResult(schedule, beta, math.inf, 'diverged'))
    diverged = sum(1 for r in results if r.status != 'ok')
    if diverged:
        log.info('%d of %d SGD schedules diverged', diverged, len(results))
    return results


def best_result(results: Sequence[GridResult]) -> GridResult:
    """The finished run with the smallest objective; first wins ties."""
    finished = [r for r in results if r.status == 'ok']
    if not finished:
        raise NumericalError('Every SGD schedule in the grid diverged')
    return min(finished, key=lambda r: r.objective)


__all__ = [
    'GridResult',
    'SgdSchedule',
    'SgdState',
    'best_result',
    'default_grid',
    'eta',
    'grid_search',
    'run_sgd',
    'sgd_step',
]
