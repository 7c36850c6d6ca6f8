from kalman_sgd.core.types import KsgdState, Observation, StepDiagnostics
from kalman_sgd.core.step import covariance_update, init_state, inverse_covariance_oracle, ksgd_step, should_stop
from kalman_sgd.core.trace import RunTrace, SnapshotCadence, StopReason, TraceRecord, TraceRecorder
from kalman_sgd.core.stream import run_stream


__all__ = [
    'KsgdState',
    'Observation',
    'RunTrace',
    'SnapshotCadence',
    'StepDiagnostics',
    'StopReason',
    'TraceRecord',
    'TraceRecorder',
    'covariance_update',
    'init_state',
    'inverse_covariance_oracle',
    'ksgd_step',
    'run_stream',
    'should_stop',
]
