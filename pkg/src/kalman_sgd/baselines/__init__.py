from kalman_sgd.baselines.sgd import (
    GridResult,
    SgdSchedule,
    SgdState,
    best_result,
    default_grid,
    eta,
    grid_search,
    run_sgd,
    sgd_step,
)
from kalman_sgd.baselines.least_squares import IncrementalQR, LeastSquaresResult, batch_least_squares


__all__ = [
    'GridResult',
    'IncrementalQR',
    'LeastSquaresResult',
    'SgdSchedule',
    'SgdState',
    'batch_least_squares',
    'best_result',
    'default_grid',
    'eta',
    'grid_search',
    'run_sgd',
    'sgd_step',
]
