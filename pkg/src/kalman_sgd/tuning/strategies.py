"""
Tuning-parameter strategies producing the sequence gamma_k^2.

Classes:
    TuningStrategy
    Fixed
    Decay
    Scheduled
    AdaptiveSoftThreshold

Functions:
    next_gamma2
    optimal_strategy
    build_strategy

Since:
    v0.1.0
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np

from kalman_sgd.errors import NumericalError, ParameterError, UsageError
from kalman_sgd.tuning.soft_threshold import AdaptiveParams, phi_clamp, xi_update


class TuningStrategy(ABC):
    """
    Produces gamma_k^2 for each step of a run.

    Strategies may carry state (the adaptive one does), so an instance belongs
    to exactly one run; use `fresh` to get an independent copy.
    """

    name: str = 'strategy'

    #: True when gamma_k^2 depends on the step index only.
    deterministic: bool = True

    @abstractmethod
    def next_gamma2(self, k: int, trace_M: float, residual: Optional[float] = None) -> float:
        """
        Tuning parameter for the step that assimilates observation ``k + 1``.

        Parameters:
            k (int):
                Observations assimilated before this step.

            trace_M (float):
                Trace of the covariance before this step.

            residual (Optional[float]):
                Pre-update residual of the observation about to be assimilated.
        """

    @property
    def bounds(self) -> Optional[tuple[float, float]]:
        """Bounds ``(L, U)`` every emitted value lies in, when the strategy guarantees any."""
        return None

    def fresh(self) -> TuningStrategy:
        return self

    def __repr__(self) -> str:
        return f'<{type(self).__name__} {self.name}>'


class Fixed(TuningStrategy):
    """Constant gamma^2."""

    def __init__(self, gamma2: float):
        if not (np.isfinite(gamma2) and gamma2 > 0):
            raise ParameterError(f'Fixed gamma2 must be positive and finite, got {gamma2!r}')
        self.gamma2 = float(gamma2)
        self.name   = 'fixed'

    def next_gamma2(self, k: int, trace_M: float, residual: Optional[float] = None) -> float:
        return self.gamma2

    @property
    def bounds(self) -> tuple[float, float]:
        return self.gamma2, self.gamma2


class Decay(TuningStrategy):
    """
    gamma_k^2 = k^(-p) with k the 1-based step index.

    Experimental: the sequence is not bounded away from zero, so it lies
    outside the convergence guarantee for bounded tuning parameters.
    """

    def __init__(self, p: float = 1.0):
        if not 0 < p <= 1:
            raise ParameterError(f'Decay exponent must lie in (0, 1], got {p!r}')
        self.p    = float(p)
        self.name = 'decay'

    def next_gamma2(self, k: int, trace_M: float, residual: Optional[float] = None) -> float:
        return float((k + 1) ** (-self.p))


class Scheduled(TuningStrategy):
    """
    User-supplied rule ``gamma_k^2 = schedule(k)`` with k the 1-based step index.

    Parameters:
        schedule (Callable[[int], float]):
            Rule returning a positive value for each step index.

        name (str):
            Label used in traces.
    """

    def __init__(self, schedule: Callable[[int], float], name: str = 'scheduled'):
        self.schedule = schedule
        self.name     = name

    def next_gamma2(self, k: int, trace_M: float, residual: Optional[float] = None) -> float:
        value = float(self.schedule(k + 1))
        if not (np.isfinite(value) and value > 0):
            raise NumericalError(f'Schedule {self.name!r} returned {value!r} at step {k + 1}')
        return value


class AdaptiveSoftThreshold(TuningStrategy):
    """
    Adaptive strategy estimating the noise variance from residuals.

    Before the delay trigger fires (first step with ``tr(M) <= delay_trace``)
    the strategy returns the ceiling U. Afterwards each call absorbs the
    residual into the running estimate and returns it clamped into [L, U].

    Parameters:
        params (AdaptiveParams):
            Bounds, threshold, delay and initial estimator state.
    """

    deterministic = False

    def __init__(self, params: AdaptiveParams):
        self.initial   = params
        self.params    = params
        self.triggered = params.delay_trace == 0
        self.name      = 'adaptive'

    def next_gamma2(self, k: int, trace_M: float, residual: Optional[float] = None) -> float:
        if not self.triggered:
            if trace_M > self.params.delay_trace:
                return self.params.upper
            self.triggered = True
        if residual is None:
            raise UsageError('Adaptive tuning needs the residual of the observation being assimilated')
        self.params = xi_update(self.params, residual, trace_M)
        return phi_clamp(self.params.xi2, self.params.lower, self.params.upper)

    @property
    def bounds(self) -> tuple[float, float]:
        return self.params.lower, self.params.upper

    def fresh(self) -> AdaptiveSoftThreshold:
        return AdaptiveSoftThreshold(self.initial)


def next_gamma2(
    strategy:      TuningStrategy,
    state_k:       int,
    trace_M:       float,
    last_residual: Optional[float] = None,
) -> float:
    """
    Ask `strategy` for the tuning parameter of the next step.

    Parameters:
        strategy (TuningStrategy):
            The run's strategy; adaptive strategies update their estimator.

        state_k (int):
            Observations assimilated so far.

        trace_M (float):
            Current covariance trace.

        last_residual (Optional[float]):
            Pre-update residual of the observation about to be assimilated.

    Returns:
        float:
            gamma_k^2 > 0.
    """
    return strategy.next_gamma2(state_k, trace_M, last_residual)


def optimal_strategy(sigma2: float) -> Fixed:
    """The optimal estimator: kSGD with gamma^2 equal to the known noise variance."""
    return Fixed(sigma2)


def build_strategy(
    name:        str,
    *,
    gamma2:      float = 1.0,
    decay_p:     float = 1.0,
    lower:       float = 1e-4,
    upper:       float = 1e4,
    threshold:   float = 10.0,
    delay_trace: float = 0.0,
) -> TuningStrategy:
    """
    Build a strategy from its configuration name.

    Parameters:
        name (str):
            One of 'fixed', 'decay', 'adaptive'.

    Raises:
        ParameterError:
            On an unknown name or invalid parameters.
    """
    key = name.strip().lower()
    if key == 'fixed':
        return Fixed(gamma2)
    if key == 'decay':
        return Decay(decay_p)
    if key == 'adaptive':
        return AdaptiveSoftThreshold(AdaptiveParams(lower, upper, threshold, delay_trace))
    raise ParameterError(f"Unknown tuning strategy '{name}'. Expected one of: fixed, decay, adaptive")


__all__ = [
    'AdaptiveSoftThreshold',
    'Decay',
    'Fixed',
    'Scheduled',
    'TuningStrategy',
    'build_strategy',
    'next_gamma2',
    'optimal_strategy',
]
