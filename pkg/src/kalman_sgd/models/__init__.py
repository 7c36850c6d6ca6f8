from kalman_sgd.models.objective import (
    LinearObjectiveReport,
    empirical_objective,
    excess_risk,
    logistic_gradient,
    logistic_nll,
    logistic_nll_arrays,
    mrs,
    mrs_arrays,
)
from kalman_sgd.models.features import (
    CategoricalSchema,
    ModelKind,
    ModelSpec,
    UnseenPolicy,
    WaveletConfig,
    encode_categoricals,
    haar_feature_matrix,
    haar_features,
    haar_psi,
)
from kalman_sgd.models.logistic import (
    EVAL_BLOCK,
    GnConfig,
    MIN_WEIGHT,
    NewtonResult,
    gn_logistic_fit,
    gn_logistic_fit_escalating,
    irls_step,
    newton_logistic,
    working_observations,
)


__all__ = [
    'CategoricalSchema',
    'EVAL_BLOCK',
    'GnConfig',
    'LinearObjectiveReport',
    'MIN_WEIGHT',
    'ModelKind',
    'ModelSpec',
    'NewtonResult',
    'UnseenPolicy',
    'WaveletConfig',
    'empirical_objective',
    'encode_categoricals',
    'excess_risk',
    'gn_logistic_fit',
    'gn_logistic_fit_escalating',
    'haar_feature_matrix',
    'haar_features',
    'haar_psi',
    'irls_step',
    'logistic_gradient',
    'logistic_nll',
    'logistic_nll_arrays',
    'mrs',
    'mrs_arrays',
    'newton_logistic',
    'working_observations',
]
