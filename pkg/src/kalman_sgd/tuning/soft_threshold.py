"""
Adaptive soft-threshold estimation of the noise variance.

The running estimator is

    xi_1^2     = f_1 r_1^2
    xi_{k+1}^2 = f_{k+1} r_{k+1}^2 / (k+1) + (1 - 1/(k+1)) xi_k^2

with forgetting weights f_k = 1 / (1 + exp(tr M - T)), and the tuning
parameter is the estimator clamped into [L, U].

Since:
    v0.1.0
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from kalman_sgd.errors import ParameterError


@dataclass(slots=True, frozen=True)
class AdaptiveParams:
    """
    Parameters and running state of the soft-threshold estimator.

    Parameters:
        lower (float):
            Clamp floor L, positive.

        upper (float):
            Clamp ceiling U, with L <= U < inf.

        threshold (float):
            Soft-threshold pivot T on the covariance trace.

        delay_trace (float):
            Estimation starts at the first step with ``tr(M) <= delay_trace``;
            0 starts it immediately.

        xi2 (float):
            Current estimate of the noise variance.

        count (int):
            Residuals absorbed into `xi2` so far.

    Raises:
        ParameterError:
            If any bound or threshold is out of range.
    """

    lower: float
    upper: float
    threshold: float
    delay_trace: float = 0.0
    xi2: float = 0.0
    count: int = 0

    def __post_init__(self) -> None:
        if not (0 < self.lower <= self.upper < np.inf):
            raise ParameterError(f'Need 0 < L <= U < inf, got L={self.lower!r}, U={self.upper!r}')
        if not (np.isfinite(self.threshold) and self.threshold > 0):
            raise ParameterError(f'Threshold must be positive and finite, got {self.threshold!r}')
        if not self.delay_trace >= 0:
            raise ParameterError(f'delay_trace must be nonnegative, got {self.delay_trace!r}')
        if not self.xi2 >= 0:
            raise ParameterError(f'xi2 must be nonnegative, got {self.xi2!r}')
        if self.count < 0:
            raise ParameterError(f'count must be nonnegative, got {self.count!r}')


def phi_clamp(x: float, lower: float, upper: float) -> float:
    """
    Clamp `x` into ``[lower, upper]``.

    Raises:
        ParameterError:
            If ``lower > upper`` or ``lower <= 0``.
    """
    if not 0 < lower <= upper:
        raise ParameterError(f'Need 0 < L <= U, got L={lower!r}, U={upper!r}')
    return min(upper, max(lower, x))


def soft_threshold_forget(trace_M: float, threshold: float) -> float:
    """
    Forgetting weight ``1 / (1 + exp(trace_M - threshold))``.

    Saturates to 0 or 1 for large gaps without overflow.
    """
    return float(expit(threshold - trace_M))


def xi_update(params: AdaptiveParams, residual: float, trace_M: float) -> AdaptiveParams:
    """
    Absorb one residual into the noise-variance estimate.

    The first residual is weighted by its forgetting factor like every later
    one.

    Returns:
        AdaptiveParams:
            Copy of `params` with `count` incremented and `xi2` updated.
    """
    f = soft_threshold_forget(trace_M, params.threshold)
    count = params.count + 1
    weighted = f * residual * residual
    if params.count == 0:
        xi2 = weighted
    else:
        xi2 = weighted / count + (1.0 - 1.0 / count) * params.xi2
    return replace(params, xi2=xi2, count=count)


__all__ = [
    'AdaptiveParams',
    'phi_clamp',
    'soft_threshold_forget',
    'xi_update',
]
