from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kalman_sgd.errors import DimensionError, DomainError


@dataclass(slots=True, frozen=True, eq=False)
class Observation:
    """
    One (feature vector, response) pair read from a stream.

    Parameters:
        x (np.ndarray):
            Feature vector of length n. Converted to a 1-D float array.

        y (float):
            Scalar response.

    Raises:
        DimensionError:
            If `x` is not one-dimensional.

        DomainError:
            If any coordinate of `x`, or `y`, is not finite.

    Example Usage:
        >>> obs = Observation([1.0, 2.0], 3.0)
        >>> obs.n
        2
    """

    x: np.ndarray
    y: float

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1:
            raise DimensionError(f'Observation features must be a vector, got shape {x.shape}')
        y = float(self.y)
        if not (np.all(np.isfinite(x)) and np.isfinite(y)):
            raise DomainError(f'Observation contains non-finite values: x={x!r}, y={y!r}')
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(slots=True, frozen=True, eq=False)
class KsgdState:
    """
    The kSGD state: parameter estimate, covariance estimate and step counter.

    Parameters:
        beta (np.ndarray):
            Parameter estimate, length n.

        cov (np.ndarray):
            Symmetric positive definite n x n covariance estimate.

        k (int):
            Number of observations assimilated so far.

    Notes:
        Instances are treated as values: `ksgd_step` never writes into the
        arrays of the state it was given.
    """

    beta: np.ndarray
    cov: np.ndarray
    k: int = 0

    @property
    def n(self) -> int:
        return self.beta.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.cov))

    def copy(self) -> KsgdState:
        return KsgdState(self.beta.copy(), self.cov.copy(), self.k)


@dataclass(slots=True, frozen=True, eq=False)
class StepDiagnostics:
    """
    Quantities computed while assimilating one observation.

    Parameters:
        residual (float):
            Pre-update residual ``y - beta^T x``.

        denom (float):
            ``gamma2 + x^T M x``.

        gain (np.ndarray):
            Kalman gain ``M x / denom``.
    """

    residual: float
    denom: float
    gain: np.ndarray


__all__ = [
    'KsgdState',
    'Observation',
    'StepDiagnostics',
]
