"""
The kSGD update and its exact-arithmetic companions.

Functions:
    init_state
    covariance_update
    ksgd_step
    inverse_covariance_oracle
    should_stop

Since:
    v0.1.0
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from kalman_sgd.core.types import KsgdState, Observation, StepDiagnostics
from kalman_sgd.errors import DimensionError, NumericalError, ParameterError


def init_state(
    n:        int,
    beta0:    Optional[Sequence[float] | np.ndarray] = None,
    m0_scale: float = 1.0,
) -> KsgdState:
    """
    Create the initial kSGD state.

    Parameters:
        n (int):
            Parameter dimension, at least 1.

        beta0 (Optional[Sequence[float] | np.ndarray]):
            Initial parameter estimate. Defaults to the zero vector.

        m0_scale (float):
            Scale ``c`` of the initial covariance ``c * I``. The convergence
            analysis covers ``c = 1`` only; other positive values are allowed.

    Returns:
        KsgdState:
            State with ``cov = m0_scale * I`` and ``k = 0``.

    Raises:
        DimensionError:
            If `n` is not positive or `beta0` has the wrong length.

        ParameterError:
            If `m0_scale` is not a positive finite number.

    Since:
        v0.1.0
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DimensionError(f'Dimension must be a positive integer, got {n!r}')
    if not (np.isfinite(m0_scale) and m0_scale > 0):
        raise ParameterError(f'Initial covariance scale must be positive and finite, got {m0_scale!r}')

    if beta0 is None:
        beta = np.zeros(n)
    else:
        beta = np.array(beta0, dtype=float).reshape(-1)
        if beta.shape[0] != n:
            raise DimensionError(f'beta0 has length {beta.shape[0]}, expected {n}')

    return KsgdState(beta=beta, cov=float(m0_scale) * np.eye(n), k=0)


def covariance_update(cov: np.ndarray, x: np.ndarray, gamma2: float) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Rank-one covariance recursion shared by every kSGD variant.

    Returns:
        tuple[np.ndarray, np.ndarray, float]:
            The symmetrized new covariance, the gain ``M x / denom`` and
            ``denom = gamma2 + x^T M x``, all computed from the given `cov`.
    """
    v = cov @ x
    denom = float(gamma2 + x @ v)
    gain = v / denom
    new = cov - np.outer(gain, x @ cov)
    return (new + new.T) / 2.0, gain, denom


def ksgd_step(
    state:     KsgdState,
    obs:       Observation,
    gamma2:    float,
    *,
    check_spd: bool = False,
) -> tuple[KsgdState, StepDiagnostics]:
    """
    Assimilate one observation.

    Computes, with the pre-update covariance ``M`` in both formulas::

        v     = M x
        denom = gamma2 + x^T v
        beta' = beta + v (y - beta^T x) / denom
        M'    = (I - v x^T / denom) M,   then M' <- (M' + M'^T) / 2

    Parameters:
        state (KsgdState):
            Current state. Not modified.

        obs (Observation):
            Observation whose feature length matches the state dimension.

        gamma2 (float):
            Tuning parameter, in (0, inf).

        check_spd (bool):
            If True, verify the smallest eigenvalue of the new covariance is
            positive and raise otherwise. Costs an eigen-decomposition.

    Returns:
        tuple[KsgdState, StepDiagnostics]:
            The new state and the residual/denominator/gain of this step.

    Raises:
        DimensionError:
            On a feature-length mismatch.

        ParameterError:
            If `gamma2` is not positive and finite.

        NumericalError:
            If the update produces non-finite values, or `check_spd` finds a
            non-positive eigenvalue.

    Since:
        v0.1.0
    """
    if not (np.isfinite(gamma2) and gamma2 > 0):
        raise ParameterError(f'gamma2 must be positive and finite, got {gamma2!r}')
    x = obs.x
    if x.shape[0] != state.n:
        raise DimensionError(f'Observation has {x.shape[0]} features, state has dimension {state.n}')

    residual = float(obs.y - state.beta @ x)
    cov, gain, denom = covariance_update(state.cov, x, gamma2)
    beta = state.beta + gain * residual

    if not (np.isfinite(denom) and np.all(np.isfinite(beta)) and np.all(np.isfinite(cov))):
        raise NumericalError(f'Non-finite kSGD update at step {state.k + 1}')
    if check_spd:
        smallest = float(np.linalg.eigvalsh(cov)[0])
        if smallest <= 0.0:
            raise NumericalError(
                f'Covariance lost positive definiteness at step {state.k + 1} '
                f'(smallest eigenvalue {smallest:.3e})'
            )

    return KsgdState(beta=beta, cov=cov, k=state.k + 1), StepDiagnostics(residual, denom, gain)


def inverse_covariance_oracle(
    observations: Sequence[Observation],
    gammas:       Sequence[float],
    *,
    n:            Optional[int] = None,
    m0_scale:     float = 1.0,
) -> np.ndarray:
    """
    Covariance after a stream, computed by direct inversion.

    Accumulates ``A = M_0^{-1} + sum_j x_j x_j^T / gamma_j^2`` and inverts it
    through a Cholesky factorization, bypassing the rank-one recursion.

    Parameters:
        observations (Sequence[Observation]):
            The assimilated observations, in any order.

        gammas (Sequence[float]):
            The tuning parameter used for each observation.

        n (Optional[int]):
            Dimension; required when `observations` is empty.

        m0_scale (float):
            Scale of the initial covariance ``M_0 = m0_scale * I``.

    Returns:
        np.ndarray:
            The symmetric matrix ``A^{-1}``.

    Raises:
        DimensionError:
            If the lists differ in length, dimensions disagree, or `n` is
            missing for an empty list.

        ParameterError:
            If any gamma is not positive.

        NumericalError:
            If ``A`` is too ill-conditioned for the factorization.

    Since:
        v0.1.0
    """
    if len(observations) != len(gammas):
        raise DimensionError(f'{len(observations)} observations but {len(gammas)} gammas')
    if not observations:
        if n is None:
            raise DimensionError('Dimension is required for an empty observation list')
        return m0_scale * np.eye(n)

    X = np.vstack([obs.x for obs in observations])
    g = np.asarray(gammas, dtype=float)
    if n is not None and X.shape[1] != n:
        raise DimensionError(f'Observations have {X.shape[1]} features, expected {n}')
    if not np.all(np.isfinite(g) & (g > 0)):
        raise ParameterError('Every gamma must be positive and finite')

    dim = X.shape[1]
    precision = np.eye(dim) / m0_scale + X.T @ (X / g[:, None])
    if np.linalg.cond(precision) * np.finfo(float).eps >= 1.0:
        raise NumericalError('Accumulated precision matrix is too ill-conditioned to invert')
    try:
        factor = scipy.linalg.cho_factor(precision)
        inverse = scipy.linalg.cho_solve(factor, np.eye(dim))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f'Failed to invert accumulated precision matrix: {exc}') from exc

    return (inverse + inverse.T) / 2.0


def should_stop(state: KsgdState, eps: float) -> bool:
    """
    Trace stop condition: True iff ``trace(cov) <= eps``.

    Raises:
        ParameterError:
            If `eps` is not positive.
    """
    if not eps > 0:
        raise ParameterError(f'eps must be positive, got {eps!r}')
    return state.trace <= eps


__all__ = [
    'covariance_update',
    'init_state',
    'inverse_covariance_oracle',
    'ksgd_step',
    'should_stop',
]
