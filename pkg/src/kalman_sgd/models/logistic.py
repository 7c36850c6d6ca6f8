"""
Logistic regression by Gauss-Newton with kSGD inner solves.

Each outer iteration linearizes the log-likelihood at the current estimate,
turning every observation into a weighted working observation of a linear
least-squares subproblem. kSGD, restarted with ``M = I`` and warm-started at
the current estimate, solves the subproblem until its covariance trace falls
below a threshold that shrinks after every outer iteration.

Classes:
    GnConfig
    NewtonResult

Functions:
    working_observations
    irls_step
    newton_logistic
    gn_logistic_fit
    gn_logistic_fit_escalating

Since:
    v0.1.0
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional

import numpy as np
import scipy.linalg
from scipy.special import expit

from kalman_sgd.core import (
    Observation,
    RunTrace,
    SnapshotCadence,
    StopReason,
    TraceRecorder,
    init_state,
    run_stream,
)
from kalman_sgd.errors import DomainError, NumericalError, ParameterError
from kalman_sgd.models.objective import logistic_gradient, logistic_nll, logistic_nll_arrays
from kalman_sgd.tuning import Fixed, TuningStrategy


log = logging.getLogger(__name__)

#: Working observations with a smaller weight are skipped.
MIN_WEIGHT = 1e-12

#: Raw observations of a one-shot stream kept to evaluate the default objective.
EVAL_BLOCK = 10_000


@dataclass(slots=True, frozen=True)
class GnConfig:
    """
    Controls of the Gauss-Newton outer loop.

    Parameters:
        trace_threshold_init (float):
            Trace threshold of the first subproblem. Defaults to 15.

        shrink_factor (float):
            The threshold is divided by this after each subproblem; > 1.
            Defaults to 5.

        inner_gamma2 (float):
            Fixed tuning parameter of the inner kSGD runs. Defaults to 0.1.

        max_outer (int):
            Maximum number of subproblems. Defaults to 10.
    """

    trace_threshold_init: float = 15.0
    shrink_factor: float = 5.0
    inner_gamma2: float = 0.1
    max_outer: int = 10

    def __post_init__(self) -> None:
        if not (np.isfinite(self.trace_threshold_init) and self.trace_threshold_init > 0):
            raise ParameterError(f'trace_threshold_init must be positive, got {self.trace_threshold_init!r}')
        if not (np.isfinite(self.shrink_factor) and self.shrink_factor > 1):
            raise ParameterError(f'shrink_factor must exceed 1, got {self.shrink_factor!r}')
        if not (np.isfinite(self.inner_gamma2) and self.inner_gamma2 > 0):
            raise ParameterError(f'inner_gamma2 must be positive, got {self.inner_gamma2!r}')
        if int(self.max_outer) != self.max_outer or self.max_outer < 1:
            raise ParameterError(f'max_outer must be a positive integer, got {self.max_outer!r}')


def _check_binary(y: np.ndarray) -> None:
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError('Logistic responses must be 0 or 1')


def working_observations(beta_bar: np.ndarray, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Linearize a block of logistic observations at `beta_bar`.

    With ``p = sigmoid(x^T beta_bar)`` and ``w = p (1 - p)``, the working
    response is ``z = x^T beta_bar + (y - p) / w`` and the weighted pair is
    ``(sqrt(w) x, sqrt(w) z)``.

    Returns:
        tuple[np.ndarray, np.ndarray, np.ndarray]:
            Weighted features and responses of the kept rows, and the boolean
            mask of kept rows (weight at least 1e-12).

    Raises:
        DomainError:
            If any response is not 0 or 1.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    _check_binary(y)
    eta = X @ beta_bar
    p = expit(eta)
    w = p * (1.0 - p)
    keep = w >= MIN_WEIGHT
    root = np.sqrt(w[keep])
    z = eta[keep] + (y[keep] - p[keep]) / w[keep]
    return X[keep] * root[:, None], root * z, keep


def irls_step(beta_bar: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Exact minimizer of the weighted least-squares subproblem at `beta_bar`.

    This is one Newton step on the logistic negative log-likelihood.
    """
    Xw, zw, _ = working_observations(np.asarray(beta_bar, dtype=float), X, y)
    solution, *_ = scipy.linalg.lstsq(Xw, zw)
    return solution


@dataclass(slots=True, frozen=True, eq=False)
class NewtonResult:
    beta: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool


def newton_logistic(
    X:        np.ndarray,
    y:        np.ndarray,
    *,
    beta0:    Optional[np.ndarray] = None,
    tol:      float = 1e-10,
    max_iter: int = 100,
) -> NewtonResult:
    """
    Full-batch damped Newton method for the mean logistic negative log-likelihood.

    Iterates until the euclidean norm of the gradient is at most `tol`, using
    a backtracking line search while far from the optimum.

    Raises:
        DomainError:
            If any response is not 0 or 1.

        NumericalError:
            If the Hessian cannot be factorized.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    _check_binary(y)
    beta = np.zeros(X.shape[1]) if beta0 is None else np.array(beta0, dtype=float)

    grad = logistic_gradient(beta, X, y)
    for iteration in range(1, max_iter + 1):
        norm = float(np.linalg.norm(grad))
        if norm <= tol:
            return NewtonResult(beta, norm, iteration - 1, True)

        p = expit(X @ beta)
        hessian = (X * (p * (1.0 - p))[:, None]).T @ X / X.shape[0]
        try:
            direction = -scipy.linalg.cho_solve(scipy.linalg.cho_factor(hessian), grad)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f'Logistic Hessian is not positive definite: {exc}') from exc

        decrement = float(-grad @ direction)
        step = 1.0
        if decrement > 1e-12:
            current = logistic_nll_arrays(beta, X, y)
            while step > 1e-10 and logistic_nll_arrays(beta + step * direction, X, y) > current - 1e-4 * step * decrement:
                step /= 2.0
        beta = beta + step * direction
        grad = logistic_gradient(beta, X, y)

    norm = float(np.linalg.norm(grad))
    return NewtonResult(beta, norm, max_iter, norm <= tol)


class _WorkingStream:
    """
    Cursor over a dataset that yields working observations at a frozen point.

    The cursor persists across subproblems; a re-iterable dataset wraps
    around, a one-shot iterator ends the fit when exhausted. For a one-shot
    iterator the first `EVAL_BLOCK` raw observations are kept in `seen`.
    """

    def __init__(self, data: Iterable[Observation]):
        self.data      = data
        self.one_shot  = iter(data) is data
        self.consumed  = 0
        self.skipped   = 0
        self.exhausted = False
        self.seen: list[Observation] = []
        self._it       = iter(data)

    def _next_raw(self) -> Optional[Observation]:
        obs = next(self._it, None)
        if obs is None and not self.one_shot:
            self._it = iter(self.data)
            obs = next(self._it, None)
        if obs is None:
            self.exhausted = True
        return obs

    def linearized(self, beta_bar: np.ndarray, budget: int) -> Iterator[Observation]:
        taken = 0
        while taken < budget:
            obs = self._next_raw()
            if obs is None:
                return
            taken += 1
            self.consumed += 1
            if obs.y not in (0.0, 1.0):
                raise DomainError(f'Logistic responses must be 0 or 1, got {obs.y!r}')
            if self.one_shot and len(self.seen) < EVAL_BLOCK:
                self.seen.append(obs)
            eta = float(obs.x @ beta_bar)
            p = float(expit(eta))
            w = p * (1.0 - p)
            if w < MIN_WEIGHT:
                self.skipped += 1
                continue
            root = np.sqrt(w)
            yield Observation(root * obs.x, root * (eta + (obs.y - p) / w))

    def nll(self, beta: np.ndarray) -> Optional[float]:
        """Mean negative log-likelihood over the whole dataset, or over `seen` for a one-shot stream."""
        if not self.one_shot:
            return logistic_nll(beta, self.data)
        if not self.seen:
            return None
        X = np.stack([obs.x for obs in self.seen])
        y = np.array([obs.y for obs in self.seen])
        return logistic_nll_arrays(beta, X, y)


def _pass_length(data: Iterable[Observation]) -> Optional[int]:
    if iter(data) is data:
        return None
    try:
        return len(data)  # type: ignore[arg-type]
    except TypeError:
        return sum(1 for _ in data)


def gn_logistic_fit(
    data:     Iterable[Observation],
    config:   GnConfig = GnConfig(),
    tuning:   Optional[TuningStrategy] = None,
    *,
    n:        Optional[int] = None,
    beta0:    Optional[np.ndarray] = None,
    recorder: Optional[TraceRecorder] = None,
) -> tuple[np.ndarray, RunTrace]:
    """
    Fit a logistic regression by Gauss-Newton with inexact kSGD subproblem solves.

    Each subproblem consumes observations until its covariance trace is at
    most the current threshold, or one full pass over the data, whichever
    comes first. ADP counts every observation consumed, including ones
    skipped for a degenerate weight.

    Parameters:
        data (Iterable[Observation]):
            Dataset with responses in {0, 1}. A re-iterable dataset is cycled;
            a one-shot iterator ends the fit when exhausted.

        config (GnConfig):
            Outer-loop controls.

        tuning (Optional[TuningStrategy]):
            Inner strategy, refreshed per subproblem. Defaults to
            ``Fixed(config.inner_gamma2)``.

        n (Optional[int]):
            Dimension; inferred from the data when omitted.

        beta0 (Optional[np.ndarray]):
            Starting estimate. Defaults to zero.

        recorder (Optional[TraceRecorder]):
            Snapshot collector. Snapshots are taken at ADP 0 and at the end
            of every subproblem, each carrying the last inner gamma^2 used.
            The default one records the mean negative log-likelihood over
            the dataset, or over the first `EVAL_BLOCK` observations read
            from a one-shot stream.

    Returns:
        tuple[np.ndarray, RunTrace]:
            Final estimate and the trace.

    Raises:
        DomainError:
            On a response that is not 0 or 1.
    """
    dim = n if n is not None else getattr(data, 'dimension', None)
    if dim is None:
        raise ParameterError('gn_logistic_fit needs the dimension n for a stream without one')
    beta = np.zeros(dim) if beta0 is None else np.array(beta0, dtype=float)
    tuning = tuning or Fixed(config.inner_gamma2)
    budget = _pass_length(data)
    stream = _WorkingStream(data)
    recorder = recorder or TraceRecorder(method='gn_logistic', objective=stream.nll)

    recorder.start()
    recorder.maybe_record(0, beta)

    threshold = config.trace_threshold_init
    outer = 0
    for outer in range(1, config.max_outer + 1):
        if stream.exhausted:
            break
        state, inner = run_stream(
            stream.linearized(beta, budget if budget is not None else np.iinfo(np.int64).max),
            tuning.fresh(),
            threshold,
            initial=init_state(dim, beta0=beta),
            recorder=TraceRecorder(method='gn_inner', cadence=SnapshotCadence(geometric=False), keep_beta=False),
        )
        beta = state.beta
        recorder.maybe_record(stream.consumed, beta, trace_M=state.trace, gamma2=inner.final.gamma2, force=True)
        log.debug('GN subproblem %d: threshold %.3e, tr(M)=%.3e, ADP %d', outer, threshold, state.trace, stream.consumed)
        if not np.all(np.isfinite(beta)):
            raise NumericalError(f'GN subproblem {outer} produced a non-finite estimate')
        threshold /= config.shrink_factor

    if stream.skipped:
        log.warning('GN fit skipped %d observations with degenerate weight', stream.skipped)

    trace = recorder.trace
    trace.stop_reason = StopReason.EXHAUSTED if stream.exhausted else StopReason.COMPLETED
    trace.meta.update(outer_iterations=outer, skipped=stream.skipped, final_threshold=threshold * config.shrink_factor)
    return beta, trace


def gn_logistic_fit_escalating(
    data:      Iterable[Observation],
    config:    GnConfig = GnConfig(),
    *,
    start:     float = 1e-4,
    factor:    float = 10.0,
    max_tries: int = 6,
    n:         Optional[int] = None,
    cadence:   Optional[SnapshotCadence] = None,
) -> tuple[np.ndarray, RunTrace, float]:
    """
    Run `gn_logistic_fit` with an escalating inner gamma^2.

    Starts at `start` and multiplies by `factor` until a fit succeeds: a fit
    fails when it raises NumericalError, returns non-finite values, or ends
    with a larger mean negative log-likelihood than the starting point.

    Returns:
        tuple[np.ndarray, RunTrace, float]:
            Estimate, trace, and the inner gamma^2 that succeeded.

    Raises:
        NumericalError:
            If every try fails.
    """
    if iter(data) is data:
        raise ParameterError('Escalation re-reads the data and needs a re-iterable dataset')
    dim = n if n is not None else getattr(data, 'dimension')
    baseline = logistic_nll(np.zeros(dim), data)

    gamma2 = start
    for attempt in range(1, max_tries + 1):
        try:
            beta, trace = gn_logistic_fit(
                data, replace(config, inner_gamma2=gamma2), n=dim,
                recorder=TraceRecorder(method='gn_logistic', cadence=cadence, objective=lambda b: logistic_nll(b, data)),
            )
            if np.all(np.isfinite(beta)) and logistic_nll(beta, data) <= baseline:
                trace.meta['inner_gamma2'] = gamma2
                return beta, trace, gamma2
            log.info('GN fit with inner gamma2=%.1e did not decrease the objective; escalating', gamma2)
        except NumericalError as exc:
            log.info('GN fit with inner gamma2=%.1e failed (%s); escalating', gamma2, exc)
        gamma2 *= factor

    raise NumericalError(f'GN fit failed for every inner gamma2 up to {gamma2 / factor:.1e}')


__all__ = [
    'EVAL_BLOCK',
    'GnConfig',
    'MIN_WEIGHT',
    'NewtonResult',
    'gn_logistic_fit',
    'gn_logistic_fit_escalating',
    'irls_step',
    'newton_logistic',
    'working_observations',
]
