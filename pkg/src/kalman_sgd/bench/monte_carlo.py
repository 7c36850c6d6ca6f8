"""
Monte-Carlo estimate of the estimator covariance around the true parameter.

All replications share one feature stream and differ only in their noise, so
the covariance recursion, which depends on the features and the tuning
sequence alone, is common to every replication. It is run once, through the
same `covariance_update` a stream run uses, while the replications' estimates
advance together as the rows of one matrix.

Since:
    v0.1.0
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from kalman_sgd.bench.settings import replication_seed
from kalman_sgd.core import covariance_update, init_state
from kalman_sgd.data import Response, SyntheticSpec, closed_form_Q, generate_arrays
from kalman_sgd.errors import NumericalError, ParameterError, UnsupportedError
from kalman_sgd.tuning import TuningStrategy, next_gamma2


log = logging.getLogger(__name__)


@dataclass(slots=True, frozen=True, eq=False)
class McSnapshot:
    """
    Monte-Carlo summary at step k.

    Attributes:
        M (np.ndarray):
            The covariance recursion at step k, common to all replications.

        empirical (np.ndarray):
            Mean over replications of ``(beta_k - beta*)(beta_k - beta*)^T``.

        prior_term (np.ndarray):
            ``M_k M_0^{-1} E_0 E_0^T M_0^{-1} M_k`` with ``E_0 = beta_0 - beta*``;
            equals `empirical` exactly when the data is noiseless.

        trace_ratio (Optional[float]):
            ``tr(empirical) * gamma2 / (sigma2 * tr(M))``, None when sigma2 is 0.

        excess_risk (float):
            Mean over replications of ``(beta_k - beta*)^T Q* (beta_k - beta*)``.
    """

    k: int
    gamma2: Optional[float]
    M: np.ndarray = field(repr=False)
    empirical: np.ndarray = field(repr=False)
    prior_term: np.ndarray = field(repr=False)
    trace_M: float = 0.0
    trace_empirical: float = 0.0
    trace_ratio: Optional[float] = None
    excess_risk: float = 0.0


@dataclass(slots=True)
class McResult:
    replications: int
    snapshots: list[McSnapshot] = field(default_factory=list)

    def at(self, k: int) -> McSnapshot:
        for snap in self.snapshots:
            if snap.k == k:
                return snap
        raise KeyError(k)


def default_snapshots(count: int) -> list[int]:
    """Powers of two up to `count`, plus `count` itself."""
    points = [2 ** j for j in range(int(np.log2(max(count, 1))) + 1) if 2 ** j <= count]
    if not points or points[-1] != count:
        points.append(count)
    return points


def monte_carlo_covariance(
    spec:         SyntheticSpec,
    tuning:       TuningStrategy,
    replications: int,
    snapshots:    Sequence[int],
    *,
    beta0:        Optional[np.ndarray] = None,
    m0_scale:     float = 1.0,
    seed:         int = 0,
) -> McResult:
    """
    Average the estimation-error outer product of kSGD over replications.

    Parameters:
        spec (SyntheticSpec):
            Linear synthetic source; its seed fixes the shared feature stream.

        tuning (TuningStrategy):
            A deterministic strategy, so gamma_k^2 is common to all replications.

        replications (int):
            Number of independent noise streams, positive.

        snapshots (Sequence[int]):
            Steps k at which to report, each at least 0.

        seed (int):
            Master seed of the per-replication noise streams.

    Returns:
        McResult:
            One snapshot per requested k, in increasing order.

    Raises:
        UnsupportedError:
            For logistic responses or a strategy that depends on residuals.

        ParameterError:
            On a non-positive replication count or a negative snapshot.
    """
    if spec.response is not Response.LINEAR:
        raise UnsupportedError('Monte-Carlo covariance is defined for linear responses only')
    if not tuning.deterministic:
        raise UnsupportedError(
            f"Tuning '{tuning.name}' depends on the residuals, so replications would not share the covariance"
        )
    if replications < 1:
        raise ParameterError(f'replications must be positive, got {replications}')
    points = sorted(set(int(k) for k in snapshots))
    if not points or points[0] < 0:
        raise ParameterError(f'Snapshots must be nonnegative steps, got {list(snapshots)}')

    horizon = points[-1]
    X = generate_arrays(spec, horizon)[0]
    Y = np.empty((replications, horizon))
    for r in range(replications):
        Y[r] = generate_arrays(spec.with_noise_seed(replication_seed(seed, r)), horizon)[1]

    state = init_state(spec.n, beta0=beta0, m0_scale=m0_scale)
    cov = state.cov
    B = np.tile(state.beta, (replications, 1))
    e0 = (state.beta - spec.beta_star) / m0_scale
    Q = closed_form_Q(spec)

    result = McResult(replications=replications)
    gamma2: Optional[float] = None
    pending = iter(points)
    target = next(pending)
    for k in range(horizon + 1):
        while target == k:
            result.snapshots.append(_snapshot(k, gamma2, cov, B, spec, e0, Q))
            target = next(pending, None)
        if k == horizon:
            break
        x = X[k]
        gamma2 = next_gamma2(tuning, k, float(np.trace(cov)))
        residuals = Y[:, k] - B @ x
        cov, gain, _ = covariance_update(cov, x, gamma2)
        B += np.outer(residuals, gain)
        if not np.all(np.isfinite(cov)):
            raise NumericalError(f'Non-finite covariance at step {k + 1}')

    log.debug('Monte-Carlo covariance: %d replications, %d snapshots up to k=%d',
              replications, len(result.snapshots), horizon)
    return result


def _snapshot(
    k:      int,
    gamma2: Optional[float],
    cov:    np.ndarray,
    B:      np.ndarray,
    spec:   SyntheticSpec,
    e0:     np.ndarray,
    Q:      np.ndarray,
) -> McSnapshot:
    D = B - spec.beta_star
    empirical = D.T @ D / D.shape[0]
    propagated = cov @ e0
    trace_M = float(np.trace(cov))
    trace_empirical = float(np.trace(empirical))
    ratio = None
    if spec.sigma2 > 0 and gamma2 is not None:
        ratio = trace_empirical * gamma2 / (spec.sigma2 * trace_M)
    return McSnapshot(
        k=k,
        gamma2=gamma2,
        M=cov.copy(),
        empirical=empirical,
        prior_term=np.outer(propagated, propagated),
        trace_M=trace_M,
        trace_empirical=trace_empirical,
        trace_ratio=ratio,
        excess_risk=float(np.mean(np.einsum('ri,ij,rj->r', D, Q, D))),
    )


__all__ = [
    'McResult',
    'McSnapshot',
    'default_snapshots',
    'monte_carlo_covariance',
]
