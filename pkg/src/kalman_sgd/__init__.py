from kalman_sgd.core import KsgdState, Observation, RunTrace, init_state, ksgd_step, run_stream, should_stop
from kalman_sgd.tuning import AdaptiveSoftThreshold, Decay, Fixed, Scheduled, TuningStrategy
from kalman_sgd.errors import KsgdError


try:
    from kalman_sgd.meta._version import __version__  # type: ignore  # noqa
except ImportError:
    __version__ = "0.0.0+local"


__all__ = [
    'AdaptiveSoftThreshold',
    'Decay',
    'Fixed',
    'KsgdError',
    'KsgdState',
    'Observation',
    'RunTrace',
    'Scheduled',
    'TuningStrategy',
    'init_state',
    'ksgd_step',
    'run_stream',
    'should_stop',
]
