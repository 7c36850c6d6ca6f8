"""
Typed experiment settings built from resolved option values.

Classes:
    CsvSource
    ExperimentConfig

Functions:
    replication_seed

Since:
    v0.1.0
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from kalman_sgd.baselines import SgdSchedule
from kalman_sgd.core import SnapshotCadence
from kalman_sgd.data import (
    ArrayDataset,
    CsvDataset,
    CsvSchema,
    Response,
    SyntheticSpec,
    condition_profile_for,
    default_beta_star,
    generate_dataset,
)
from kalman_sgd.errors import ConfigError, KsgdError
from kalman_sgd.models import CategoricalSchema, GnConfig, ModelKind, ModelSpec, WaveletConfig
from kalman_sgd.tuning import TuningStrategy, build_strategy


LINEAR_METHODS = {'ksgd', 'sgd', 'oracle'}
LOGISTIC_METHODS = {'gn_logistic', 'oracle'}


def replication_seed(seed: int, replication: int) -> int:
    """Seed of one replication, derived from the master seed."""
    return int(np.random.SeedSequence([seed, replication]).generate_state(1)[0])


@dataclass(slots=True, frozen=True)
class CsvSource:
    path: Path
    schema: CsvSchema
    on_error: str = 'abort'


@dataclass(slots=True, frozen=True, eq=False)
class ExperimentConfig:
    """
    Everything `run_experiment` needs, validated.

    Invariants:
        At least one method is selected and ``eps > 0``.
    """

    source: SyntheticSpec | CsvSource
    methods: tuple[str, ...]
    eps: float
    count: int = 10000
    problem: str = 'linear'
    max_obs: Optional[int] = None
    tunings: tuple[str, ...] = ('fixed',)
    tuning_params: dict[str, float] = field(default_factory=dict)
    m0_scale: float = 1.0
    check_spd: bool = False
    beta0: Optional[np.ndarray] = None
    sgd: SgdSchedule = SgdSchedule(p=1.0, c1=0.0, c2=0.0, c3=0.01)
    sgd_epochs: int = 1
    sgd_grid: bool = False
    sgd_schedules: tuple[SgdSchedule, ...] = ()
    gn: GnConfig = GnConfig()
    gn_escalate: bool = False
    snapshot_stride: int = 0
    snapshot_geometric: bool = True
    replications: int = 1
    workers: int = 1
    seed: int = 0
    out: Path = Path('ksgd-out')
    features_precomputed: bool = False
    mc_snapshots: Optional[tuple[int, ...]] = None
    config_hash: str = ''

    def __post_init__(self) -> None:
        if not self.methods:
            raise ConfigError('At least one method must be selected')
        if not self.eps > 0:
            raise ConfigError(f'eps must be positive, got {self.eps!r}')
        if self.replications < 1:
            raise ConfigError(f'replications must be at least 1, got {self.replications}')
        if self.workers < 1:
            raise ConfigError(f'workers must be at least 1, got {self.workers}')
        allowed = LOGISTIC_METHODS if self.problem == 'logistic' else LINEAR_METHODS
        wrong = [m for m in self.methods if m not in allowed]
        if wrong:
            raise ConfigError(f"Methods {wrong} do not apply to the '{self.problem}' problem; choose from {sorted(allowed)}")

    # ---------- Construction ----------

    @classmethod
    def from_values(cls, values: Mapping[str, Any], *, config_hash: str = '') -> ExperimentConfig:
        """
        Build settings from resolved option values.

        Raises:
            ConfigError:
                On any inconsistent or invalid combination of options.
        """
        try:
            return cls._from_values(values, config_hash)
        except ConfigError:
            raise
        except KsgdError as exc:
            raise ConfigError(f'Invalid experiment configuration: {exc}') from exc

    @classmethod
    def _from_values(cls, v: Mapping[str, Any], config_hash: str) -> ExperimentConfig:
        problem = v['problem']
        if v['data_source'] == 'csv':
            source = _csv_source(v)
            n = source.schema.dimension
        else:
            source = _synthetic_source(v, problem)
            n = source.n

        beta0 = None
        if v['beta0'] is not None:
            beta0 = np.asarray(v['beta0'], dtype=float)
            if beta0.shape[0] != n:
                raise ConfigError(f'beta0 has length {beta0.shape[0]}, expected {n}')

        sgd_schedules = tuple(
            SgdSchedule(p=p, c1=c1, c2=c2, c3=c3)
            for p, c3, c1, c2 in itertools.product(v['sgd_grid_p'], v['sgd_grid_c3'], v['sgd_grid_c1'], v['sgd_grid_c2'])
        )

        return cls(
            source=source,
            methods=tuple(dict.fromkeys(v['methods'])),
            eps=v['eps'],
            count=v['count'],
            problem=problem,
            max_obs=v['max_obs'],
            tunings=tuple(dict.fromkeys(v['ksgd_tuning'])),
            tuning_params={
                'gamma2': v['ksgd_gamma2'],
                'decay_p': v['ksgd_decay_p'],
                'lower': v['adaptive_lower'],
                'upper': v['adaptive_upper'],
                'threshold': v['adaptive_threshold'],
                'delay_trace': v['adaptive_delay_trace'],
            },
            m0_scale=v['ksgd_m0_scale'],
            check_spd=v['ksgd_check_spd'],
            beta0=beta0,
            sgd=SgdSchedule(p=v['sgd_p'], c1=v['sgd_c1'], c2=v['sgd_c2'], c3=v['sgd_c3']),
            sgd_epochs=v['sgd_epochs'],
            sgd_grid=v['sgd_grid'],
            sgd_schedules=sgd_schedules,
            gn=GnConfig(
                trace_threshold_init=v['gn_threshold_init'],
                shrink_factor=v['gn_shrink_factor'],
                inner_gamma2=v['gn_inner_gamma2'],
                max_outer=v['gn_max_outer'],
            ),
            gn_escalate=v['gn_escalate'],
            snapshot_stride=v['snapshot_stride'],
            snapshot_geometric=v['snapshot_geometric'],
            replications=v['replications'],
            workers=v['workers'],
            seed=v['seed'],
            out=Path(v['out']),
            features_precomputed=v['features_precomputed'],
            mc_snapshots=tuple(v['mc_snapshots']) if v['mc_snapshots'] else None,
            config_hash=config_hash,
        )

    # ---------- Queries ----------

    @property
    def dimension(self) -> int:
        if isinstance(self.source, SyntheticSpec):
            return self.source.n
        return self.source.schema.dimension

    @property
    def beta_star(self) -> Optional[np.ndarray]:
        return self.source.beta_star if isinstance(self.source, SyntheticSpec) else None

    def cadence(self, length: Optional[int] = None) -> SnapshotCadence:
        if self.snapshot_stride > 0 or length is None:
            return SnapshotCadence(stride=self.snapshot_stride, geometric=self.snapshot_geometric)
        return SnapshotCadence.for_length(length, geometric=self.snapshot_geometric)

    def strategy(self, name: str) -> TuningStrategy:
        return build_strategy(name, **self.tuning_params)

    def dataset(self, replication: int) -> ArrayDataset | CsvDataset:
        """
        The data of one replication: synthetic data re-seeded per replication,
        or the same CSV file for every replication.
        """
        if isinstance(self.source, CsvSource):
            return CsvDataset(self.source.path, self.source.schema, self.source.on_error)
        spec = self.source.with_seed(replication_seed(self.seed, replication))
        return generate_dataset(spec, self.count)


def _synthetic_source(v: Mapping[str, Any], problem: str) -> SyntheticSpec:
    n = v['n']
    if n is None or n < 1:
        raise ConfigError(f'n must be a positive integer, got {n!r}')
    if v['count'] is None or v['count'] < 1:
        raise ConfigError(f"count must be a positive integer, got {v['count']!r}")
    beta_star = np.asarray(v['beta_star'], dtype=float) if v['beta_star'] is not None else default_beta_star(n)

    profile = None
    if v['condition_profile'] is not None:
        profile = np.asarray(v['condition_profile'], dtype=float)
    elif v['condition_number'] is not None:
        profile = condition_profile_for(n, v['condition_number'])

    return SyntheticSpec(
        n=n,
        beta_star=beta_star,
        sigma2=v['sigma2'],
        feature_law=v['feature_law'],
        bound=v['feature_bound'],
        condition_profile=profile,
        seed=v['seed'],
        noise_law=v['noise_law'],
        response=Response.LOGISTIC if problem == 'logistic' else Response.LINEAR,
    )


def _column(name: str, header: bool) -> str | int:
    return int(name) if not header and name.isdigit() else name


def _csv_source(v: Mapping[str, Any]) -> CsvSource:
    if v['csv_path'] is None:
        raise ConfigError("data_source 'csv' needs csv_path")
    if not v['csv_features']:
        raise ConfigError("data_source 'csv' needs csv_features")
    header = v['csv_header']
    schema = CsvSchema(
        feature_columns=tuple(_column(c, header) for c in v['csv_features']),
        response_column=_column(v['csv_response'], header),
        header=header,
        delimiter=v['csv_delimiter'],
    )
    return CsvSource(Path(v['csv_path']), schema, v['csv_on_error'])


def model_spec_from_values(v: Mapping[str, Any]) -> ModelSpec:
    """Featurization settings of the ``featurize`` command."""
    categorical = None
    if v['categorical_schema']:
        categorical = CategoricalSchema(
            categoricals={k: tuple(map(str, levels)) for k, levels in v['categorical_schema'].items()},
            continuous=tuple(v['continuous_columns']),
            include_intercept=v['categorical_intercept'],
            unseen=v['unseen_category'],
        )
    if v['wavelet_resolutions']:
        return ModelSpec(
            kind=ModelKind.WAVELET_LINEAR,
            wavelet=WaveletConfig(tuple(v['wavelet_resolutions']), v['wavelet_intercept']),
            raw_columns=tuple(v['raw_columns']),
        )
    if categorical is None and not v['raw_columns']:
        raise ConfigError('featurize needs wavelet_resolutions, categorical_schema or raw_columns')
    kind = ModelKind.LOGISTIC_GN if v['problem'] == 'logistic' else ModelKind.LINEAR
    return ModelSpec(kind=kind, categorical=categorical, raw_columns=tuple(v['raw_columns']))


__all__ = [
    'CsvSource',
    'ExperimentConfig',
    'model_spec_from_values',
    'replication_seed',
]
