"""
Objective evaluation over finite datasets.

The reported linear metric is the mean residual squared (MRS). The empirical
objective carries a factor one half, so ``mrs(beta) == 2 * empirical_objective(beta)``.

Since:
    v0.1.0
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import expit

from kalman_sgd.core import Observation
from kalman_sgd.data.dataset import iter_blocks
from kalman_sgd.errors import DimensionError, DomainError


DataLike = Iterable[Observation]


@dataclass(slots=True, frozen=True)
class LinearObjectiveReport:
    """
    Mean residual squared of a parameter over a dataset.

    Parameters:
        mrs (float):
            ``(1/N) * sum (y_i - beta^T x_i)^2``, nonnegative.

        count (int):
            Number of observations N, positive.
    """

    mrs: float
    count: int

    @property
    def empirical_objective(self) -> float:
        return self.mrs / 2.0


def _mean_over(data: DataLike, beta: np.ndarray, per_block: Callable[[np.ndarray, np.ndarray], float]) -> tuple[float, int]:
    total, count = 0.0, 0
    for X, y in iter_blocks(data):
        if X.shape[1] != beta.shape[0]:
            raise DimensionError(f'Data has {X.shape[1]} features, parameter has {beta.shape[0]}')
        total += per_block(X, y)
        count += X.shape[0]
    if count == 0:
        raise DomainError('Cannot evaluate an objective over an empty dataset')
    return total / count, count


def mrs(beta: np.ndarray, data: DataLike) -> LinearObjectiveReport:
    """
    Mean residual squared of `beta` over `data`.

    Parameters:
        beta (np.ndarray):
            Parameter, length n.

        data (Iterable[Observation]):
            A dataset (anything with ``chunks``) or an iterable of observations.

    Returns:
        LinearObjectiveReport

    Raises:
        DomainError:
            If `data` is empty.

        DimensionError:
            On a dimension mismatch.

    Example Usage:
        >>> data = [Observation([1.0], 0.0), Observation([1.0], 2.0)]
        >>> mrs(np.array([1.0]), data).mrs
        1.0
    """
    beta = np.asarray(beta, dtype=float)

    def block(X: np.ndarray, y: np.ndarray) -> float:
        r = y - X @ beta
        return float(r @ r)

    value, count = _mean_over(data, beta, block)
    return LinearObjectiveReport(mrs=value, count=count)


def mrs_arrays(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    if X.shape[0] == 0:
        raise DomainError('Cannot evaluate an objective over an empty dataset')
    r = y - X @ np.asarray(beta, dtype=float)
    return float(r @ r) / X.shape[0]


def empirical_objective(beta: np.ndarray, data: DataLike) -> float:
    """Empirical objective ``(1/N) * sum (1/2)(y_i - beta^T x_i)^2``."""
    return mrs(beta, data).empirical_objective


def excess_risk(beta: np.ndarray, beta_star: np.ndarray, Q: np.ndarray) -> float:
    """
    Expected excess MRS ``(beta - beta*)^T Q (beta - beta*)``.

    Equals ``2 * (D(beta) - D(beta*))`` for the population objective D.
    """
    d = np.asarray(beta, dtype=float) - np.asarray(beta_star, dtype=float)
    return float(d @ Q @ d)


def logistic_nll(beta: np.ndarray, data: DataLike) -> float:
    """Mean negative log-likelihood of a logistic model with responses in {0, 1}."""
    beta = np.asarray(beta, dtype=float)

    def block(X: np.ndarray, y: np.ndarray) -> float:
        z = X @ beta
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    return _mean_over(data, beta, block)[0]


def logistic_nll_arrays(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    z = X @ np.asarray(beta, dtype=float)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_gradient(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of `logistic_nll_arrays`: ``X^T (p - y) / N``."""
    p = expit(X @ np.asarray(beta, dtype=float))
    return X.T @ (p - y) / X.shape[0]


__all__ = [
    'LinearObjectiveReport',
    'empirical_objective',
    'excess_risk',
    'logistic_gradient',
    'logistic_nll',
    'logistic_nll_arrays',
    'mrs',
    'mrs_arrays',
]
