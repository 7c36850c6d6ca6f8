"""
Run traces: time-stamped snapshots of a solver run.

Classes:
    StopReason
    TraceRecord
    RunTrace
    SnapshotCadence
    TraceRecorder

Since:
    v0.1.0
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterator, Optional

import numpy as np

from kalman_sgd.errors import ParameterError


class StopReason(str, Enum):
    CONVERGED = 'converged'
    EXHAUSTED = 'exhausted'
    MAX_OBS = 'max_obs'
    COMPLETED = 'completed'


@dataclass(slots=True)
class TraceRecord:
    """
    One snapshot of a run.

    Parameters:
        adp (int):
            Accumulated data points assimilated at the snapshot.

        wall_seconds (float):
            Seconds elapsed since the run started.

        objective (Optional[float]):
            Objective value; usually filled in after the run.

        trace_M (Optional[float]):
            Trace of the covariance estimate, for kSGD-type methods.

        gamma2 (Optional[float]):
            Tuning parameter used for the most recent step.

        beta (Optional[np.ndarray]):
            Copy of the parameter estimate, kept for post-hoc evaluation.
            Not written to trace files.
    """

    adp: int
    wall_seconds: float
    objective: Optional[float] = None
    trace_M: Optional[float] = None
    gamma2: Optional[float] = None
    beta: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(slots=True)
class RunTrace:
    """
    Ordered snapshots of one method run plus run metadata.

    Invariants:
        ``adp`` is strictly increasing and ``wall_seconds`` nondecreasing
        across `records`; `append` enforces both.
    """

    method: str
    records: list[TraceRecord] = field(default_factory=list)
    stop_reason: StopReason = StopReason.COMPLETED
    config_hash: str = ''
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.stop_reason is StopReason.CONVERGED

    @property
    def final(self) -> Optional[TraceRecord]:
        return self.records[-1] if self.records else None

    def append(self, record: TraceRecord) -> None:
        if self.records:
            last = self.records[-1]
            if record.adp <= last.adp:
                raise ParameterError(f'Trace adp must increase: {record.adp} after {last.adp}')
            record.wall_seconds = max(record.wall_seconds, last.wall_seconds)
        self.records.append(record)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(slots=True, frozen=True)
class SnapshotCadence:
    """
    When to take snapshots: every time the step count doubles, and every
    `stride` steps.

    Parameters:
        stride (int):
            Fixed stride; 0 disables the stride rule.

        geometric (bool):
            Snapshot at k = 1, 2, 4, 8, ...
    """

    stride: int = 0
    geometric: bool = True

    def __post_init__(self) -> None:
        if self.stride < 0:
            raise ParameterError(f'Snapshot stride must be nonnegative, got {self.stride}')

    @classmethod
    def for_length(cls, count: int, *, geometric: bool = True) -> SnapshotCadence:
        """Default cadence for a run over `count` observations: stride max(1, count // 200)."""
        return cls(stride=max(1, count // 200), geometric=geometric)

    def due(self, k: int) -> bool:
        if k <= 0:
            return False
        if self.geometric and k & (k - 1) == 0:
            return True
        return self.stride > 0 and k % self.stride == 0


TraceSink = Callable[[TraceRecord], None]


class TraceRecorder:
    """
    Collects snapshots into a RunTrace according to a cadence.

    Parameters:
        method (str):
            Method label stored on the trace.

        cadence (SnapshotCadence):
            Snapshot schedule. Defaults to geometric snapshots only.

        keep_beta (bool):
            Store a copy of the parameter estimate in each record.

        sink (Optional[Callable[[TraceRecord], None]]):
            Called with every record as it is taken.

        objective (Optional[Callable[[np.ndarray], Optional[float]]]):
            Evaluated on the estimate at every snapshot, when given. A None
            result leaves the record without an objective.
    """

    def __init__(
        self,
        method:    str = 'ksgd',
        cadence:   Optional[SnapshotCadence] = None,
        *,
        keep_beta: bool = True,
        sink:      Optional[TraceSink] = None,
        objective: Optional[Callable[[np.ndarray], Optional[float]]] = None,
    ):
        self.cadence   = cadence or SnapshotCadence()
        self.keep_beta = keep_beta
        self.sink      = sink
        self.objective = objective
        self.trace     = RunTrace(method=method)
        self._started  = time.perf_counter()

    def start(self) -> None:
        self._started = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._started

    def maybe_record(
        self,
        adp:     int,
        beta:    np.ndarray,
        *,
        trace_M: Optional[float] = None,
        gamma2:  Optional[float] = None,
        force:   bool = False,
    ) -> None:
        if not (force or adp == 0 or self.cadence.due(adp)):
            return
        if self.trace.records and self.trace.records[-1].adp == adp:
            return
        value = self.objective(beta) if self.objective is not None else None
        record = TraceRecord(
            adp=adp,
            wall_seconds=self.elapsed,
            objective=float(value) if value is not None else None,
            trace_M=trace_M,
            gamma2=gamma2,
            beta=beta.copy() if self.keep_beta else None,
        )
        self.trace.append(record)
        if self.sink is not None:
            self.sink(record)


__all__ = [
    'RunTrace',
    'SnapshotCadence',
    'StopReason',
    'TraceRecord',
    'TraceRecorder',
    'TraceSink',
]
