from kalman_sgd.tuning.soft_threshold import AdaptiveParams, phi_clamp, soft_threshold_forget, xi_update
from kalman_sgd.tuning.strategies import (
    AdaptiveSoftThreshold,
    Decay,
    Fixed,
    Scheduled,
    TuningStrategy,
    build_strategy,
    next_gamma2,
    optimal_strategy,
)


__all__ = [
    'AdaptiveParams',
    'AdaptiveSoftThreshold',
    'Decay',
    'Fixed',
    'Scheduled',
    'TuningStrategy',
    'build_strategy',
    'next_gamma2',
    'optimal_strategy',
    'phi_clamp',
    'soft_threshold_forget',
    'xi_update',
]
