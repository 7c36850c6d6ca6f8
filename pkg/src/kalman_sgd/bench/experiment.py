"""
Experiment runner: every configured method over the same per-replication data.

Objectives are evaluated after each run, on the stored parameter snapshots
over the whole dataset, so recorded values never depend on solver internals.
The linear objective is the mean residual squared; the logistic one is the
mean negative log-likelihood.

Since:
    v0.1.0
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from kalman_sgd.baselines import batch_least_squares, best_result, grid_search, run_sgd
from kalman_sgd.bench.settings import ExperimentConfig
from kalman_sgd.core import RunTrace, StopReason, TraceRecord, TraceRecorder, init_state, run_stream
from kalman_sgd.data import ArrayDataset, SyntheticSpec, as_arrays, closed_form_Q
from kalman_sgd.errors import UnsupportedError
from kalman_sgd.models import (
    gn_logistic_fit,
    gn_logistic_fit_escalating,
    logistic_nll,
    logistic_nll_arrays,
    mrs,
    mrs_arrays,
    newton_logistic,
)


log = logging.getLogger(__name__)


@dataclass(slots=True)
class SummaryRow:
    method: str
    replication: int
    status: str
    converged: Optional[bool] = None
    adp: Optional[int] = None
    wall_seconds: Optional[float] = None
    objective: Optional[float] = None
    oracle_objective: Optional[float] = None
    excess_objective: Optional[float] = None
    trace_M: Optional[float] = None
    error_sq: Optional[float] = None
    risk_proxy: Optional[float] = None
    flop_proxy: Optional[float] = None


SUMMARY_COLUMNS = tuple(f.name for f in fields(SummaryRow))


@dataclass(slots=True)
class ExperimentResult:
    """
    Traces and summary rows of one experiment.

    Attributes:
        traces (list[tuple[int, RunTrace]]):
            ``(replication, trace)`` pairs, in replication then method order.

        summary (list[SummaryRow]):
            One row per method and replication, failed methods included.
    """

    traces: list[tuple[int, RunTrace]] = field(default_factory=list)
    summary: list[SummaryRow] = field(default_factory=list)

    def rows_for(self, method: str) -> list[SummaryRow]:
        return [row for row in self.summary if row.method == method]


def flop_proxy(method: str, n: int, adp: int) -> Optional[float]:
    """Per-observation cost model summed over the observations assimilated."""
    if method.startswith('ksgd'):
        per_obs = 5 * n * n + 6 * n
    elif method == 'sgd':
        per_obs = 4 * n
    elif method == 'gn_logistic':
        per_obs = 5 * n * n + 12 * n
    elif method == 'oracle_qr':
        per_obs = 6 * (n + 1) ** 2
    else:
        return None
    return float(per_obs * adp)


def ksgd_labels(config: ExperimentConfig) -> list[tuple[str, str]]:
    """``(label, tuning)`` pairs; the label carries the tuning only when several run."""
    if len(config.tunings) == 1:
        return [('ksgd', config.tunings[0])]
    return [(f'ksgd-{name}', name) for name in config.tunings]


class _Replication:
    """One replication: its data, its objective and the oracle reference."""

    def __init__(self, config: ExperimentConfig, replication: int):
        self.config      = config
        self.replication = replication
        self.data        = config.dataset(replication)
        self.n           = config.dimension
        self.logistic    = config.problem == 'logistic'
        self.count       = len(self.data) if isinstance(self.data, ArrayDataset) else None
        self.objective   = self._objective()
        self.oracle_beta: Optional[np.ndarray] = None
        self.oracle_objective: Optional[float] = None

    def _objective(self) -> Callable[[np.ndarray], float]:
        if isinstance(self.data, ArrayDataset):
            X, y = self.data.X, self.data.y
            if self.logistic:
                return lambda beta: logistic_nll_arrays(beta, X, y)
            return lambda beta: mrs_arrays(beta, X, y)
        if self.logistic:
            return lambda beta: logistic_nll(beta, self.data)
        return lambda beta: mrs(beta, self.data).mrs

    def cadence(self):
        return self.config.cadence(self.count)

    # ---------- Methods ----------

    def run_ksgd(self, label: str, tuning: str) -> RunTrace:
        cfg = self.config
        recorder = TraceRecorder(label, self.cadence())
        state, trace = run_stream(
            self.data,
            cfg.strategy(tuning),
            cfg.eps,
            initial=init_state(self.n, beta0=cfg.beta0, m0_scale=cfg.m0_scale),
            max_obs=cfg.max_obs,
            recorder=recorder,
            check_spd=cfg.check_spd,
        )
        trace.meta['tuning'] = tuning
        risk = self.risk_proxy(state.cov, trace.final.gamma2)
        if risk is not None:
            trace.meta['risk_proxy'] = risk
        return trace

    def run_sgd(self) -> RunTrace:
        cfg = self.config
        schedule = cfg.sgd
        if cfg.sgd_grid:
            X, y = as_arrays(self.data)
            best = best_result(grid_search(X, y, cfg.sgd_schedules, epochs=cfg.sgd_epochs, objective=self.objective))
            schedule = best.schedule
            log.info('SGD grid picked %s (objective %.6g)', schedule.as_dict(), best.objective)
        _, trace = run_sgd(
            self.data,
            schedule,
            n=self.n,
            beta0=cfg.beta0,
            epochs=cfg.sgd_epochs,
            max_obs=cfg.max_obs,
            recorder=TraceRecorder('sgd', self.cadence()),
        )
        return trace

    def run_gn(self) -> RunTrace:
        cfg = self.config
        if cfg.gn_escalate:
            _, trace, _ = gn_logistic_fit_escalating(self.data, cfg.gn, n=self.n, cadence=self.cadence())
        else:
            _, trace = gn_logistic_fit(
                self.data, cfg.gn, n=self.n, beta0=cfg.beta0,
                recorder=TraceRecorder('gn_logistic', self.cadence()),
            )
        return trace

    def run_oracle(self) -> RunTrace:
        """Batch solution; QR for least squares, damped Newton for logistic."""
        started = time.perf_counter()
        trace = RunTrace(method='oracle')
        if self.logistic:
            X, y = as_arrays(self.data)
            result = newton_logistic(X, y)
            beta, adp = result.beta, X.shape[0] * max(1, result.iterations)
            trace.stop_reason = StopReason.CONVERGED if result.converged else StopReason.COMPLETED
            trace.meta.update(newton_iterations=result.iterations, grad_norm=result.grad_norm)
        else:
            result = batch_least_squares(self.data, n=self.n)
            beta, adp = result.beta, result.count
            trace.stop_reason = StopReason.CONVERGED
            trace.meta.update(rank=result.rank, rank_deficient=result.rank_deficient)
        trace.append(TraceRecord(adp=adp, wall_seconds=time.perf_counter() - started, beta=beta))
        self.oracle_beta = beta
        return trace

    # ---------- Bookkeeping ----------

    def risk_proxy(self, cov: np.ndarray, gamma2: Optional[float]) -> Optional[float]:
        """``tr(Q* M) sigma^2 / gamma^2`` for linear synthetic data; None elsewhere or before any step."""
        source = self.config.source
        if self.logistic or gamma2 is None or not isinstance(source, SyntheticSpec):
            return None
        try:
            Q = closed_form_Q(source)
        except UnsupportedError:
            return None
        return float(np.trace(Q @ cov)) * source.sigma2 / gamma2

    def evaluate(self, trace: RunTrace) -> None:
        for record in trace:
            if record.beta is not None and record.objective is None:
                record.objective = float(self.objective(record.beta))

    def summarize(self, trace: RunTrace) -> SummaryRow:
        final = trace.final
        beta_star = self.config.beta_star
        error_sq = None
        if beta_star is not None and final.beta is not None:
            diff = final.beta - beta_star
            error_sq = float(diff @ diff)

        if trace.method == 'oracle':
            flops = None if self.logistic else flop_proxy('oracle_qr', self.n, final.adp)
        else:
            flops = flop_proxy(trace.method, self.n, final.adp)

        excess = None
        if final.objective is not None and self.oracle_objective is not None:
            excess = final.objective - self.oracle_objective

        return SummaryRow(
            method=trace.method,
            replication=self.replication,
            status='ok',
            converged=trace.converged,
            adp=final.adp,
            wall_seconds=final.wall_seconds,
            objective=final.objective,
            oracle_objective=self.oracle_objective,
            excess_objective=excess,
            trace_M=final.trace_M,
            error_sq=error_sq,
            risk_proxy=trace.meta.get('risk_proxy'),
            flop_proxy=flops,
        )


def _guarded(label: str, replication: int, run: Callable[[], RunTrace]) -> Optional[RunTrace]:
    try:
        return run()
    except Exception:
        log.exception('Method %s failed in replication %d', label, replication)
        return None


def run_replication(config: ExperimentConfig, replication: int) -> tuple[list[RunTrace], list[SummaryRow]]:
    """
    Run every method of `config` on the data of one replication.

    A method that raises is logged and reported with status 'failed'; the
    remaining methods still run.
    """
    rep = _Replication(config, replication)

    blocks: list[tuple[str, Callable[[], RunTrace]]] = []
    for method in config.methods:
        if method == 'ksgd':
            blocks.extend((label, lambda label=label, name=name: rep.run_ksgd(label, name)) for label, name in ksgd_labels(config))
        elif method == 'sgd':
            blocks.append(('sgd', rep.run_sgd))
        elif method == 'gn_logistic':
            blocks.append(('gn_logistic', rep.run_gn))

    oracle_trace = _guarded('oracle', replication, rep.run_oracle)
    if oracle_trace is not None:
        rep.evaluate(oracle_trace)
        rep.oracle_objective = oracle_trace.final.objective

    results: list[tuple[str, Optional[RunTrace]]] = []
    for method in config.methods:
        if method == 'oracle':
            results.append(('oracle', oracle_trace))
    for label, run in blocks:
        log.info('Replication %d: running %s', replication, label)
        trace = _guarded(label, replication, run)
        if trace is not None:
            rep.evaluate(trace)
        results.append((label, trace))

    traces, rows = [], []
    for label, trace in results:
        if trace is None:
            rows.append(SummaryRow(method=label, replication=replication, status='failed',
                                   oracle_objective=rep.oracle_objective))
            continue
        trace.config_hash = config.config_hash
        row = rep.summarize(trace)
        log.info('Replication %d: %s finished at ADP %d in %.3fs, objective %s',
                 replication, label, row.adp, row.wall_seconds, row.objective)
        traces.append(trace)
        rows.append(row)
    return traces, rows


def _replication_task(args: tuple[ExperimentConfig, int]) -> tuple[list[RunTrace], list[SummaryRow]]:
    return run_replication(*args)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """
    Run every method block of `config` over each replication.

    Replications run in a process pool when ``config.workers > 1``; results
    keep replication order either way, so outputs do not depend on
    scheduling.

    Returns:
        ExperimentResult
    """
    tasks = [(config, r) for r in range(config.replications)]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_replication_task, tasks))
    else:
        outputs = [_replication_task(task) for task in tasks]

    result = ExperimentResult()
    for replication, (traces, rows) in enumerate(outputs):
        result.traces.extend((replication, trace) for trace in traces)
        result.summary.extend(rows)

    failed = sum(1 for row in result.summary if row.status != 'ok')
    if failed:
        log.warning('%d of %d method runs failed', failed, len(result.summary))
    return result


__all__ = [
    'ExperimentResult',
    'SUMMARY_COLUMNS',
    'SummaryRow',
    'flop_proxy',
    'ksgd_labels',
    'run_experiment',
    'run_replication',
]
