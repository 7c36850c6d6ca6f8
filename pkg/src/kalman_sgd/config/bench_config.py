"""
Benchmark option catalogue and resolver.

Classes:
    BenchConfig

Functions:
    bench_spec
    merge_sources

Since:
    v0.1.0
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from kalman_sgd.config.builder import ConfigBuilder
from kalman_sgd.config.conf_spec import ConfigSpec
from kalman_sgd.config.loader import load_file, parse_cli, parse_env
from kalman_sgd.config.writer import plain, to_yaml
from kalman_sgd.errors import ConfigError


log = logging.getLogger(__name__)


METHODS = ('ksgd', 'sgd', 'oracle', 'gn_logistic')
TUNINGS = ('fixed', 'decay', 'adaptive')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def bench_spec() -> ConfigSpec:
    """Every option understood by ``ksgd-bench``."""
    return (
        ConfigBuilder()
        # general
        .add('config', 'path', description='YAML or JSON file of option values.')
        .add('seed', 'int', default=0, description='Master seed; replications and methods derive theirs from it.')
        .add('out', 'path', default='ksgd-out', description='Output directory.')
        .add('eps', 'float', default=1e-8, description='kSGD stops once the covariance trace is at most eps.')
        .add('max_obs', 'int', description='Upper bound on observations assimilated per run.')
        .add('log_level', 'str', default='INFO', choices=LOG_LEVELS, description='Logging level.')
        .add('workers', 'int', default=1, description='Processes for replications and grid search.')
        .add('replications', 'int', default=1, description='Independent replications of each method.')
        .add('snapshot_stride', 'int', default=0, description='Snapshot every this many observations; 0 picks max(1, N/200).')
        .add('snapshot_geometric', 'bool', default=True, description='Also snapshot at ADP 1, 2, 4, 8, ...')
        .add('methods', 'list[str]', default=['ksgd', 'sgd', 'oracle'], choices=METHODS, description='Methods to run.')
        .add('problem', 'str', default='linear', choices=('linear', 'logistic'), description='Regression problem.')
        # data
        .add('data_source', 'str', default='synthetic', choices=('synthetic', 'csv'), description='Where observations come from.')
        .add('n', 'int', default=5, description='Synthetic feature dimension.')
        .add('count', 'int', default=10000, description='Synthetic observations per replication.')
        .add('beta_star', 'list[float]', description='True parameter; defaults to (1, -1, 1, ...).')
        .add('beta0', 'list[float]', description='Initial estimate for every method; defaults to zero.')
        .add('sigma2', 'float', default=1.0, description='Synthetic noise variance.')
        .add('feature_law', 'str', default='uniform_cube', choices=('uniform_cube', 'gaussian', 'uniform_unit'), description='Synthetic feature law.')
        .add('feature_bound', 'float', default=1.0, description='Half-width of the uniform cube, or width of the unit box.')
        .add('condition_number', 'float', description='Target condition number of Q*, via geometric feature scales.')
        .add('condition_profile', 'list[float]', description='Explicit per-coordinate feature scales.')
        .add('noise_law', 'str', default='gaussian', choices=('gaussian', 'two_point'), description='Synthetic noise law.')
        .add('csv_path', 'path', description='CSV input file.')
        .add('csv_features', 'list[str]', description='Feature columns (names, or indices without a header).')
        .add('csv_response', 'str', default='y', description='Response column.')
        .add('csv_header', 'bool', default=True, description='Whether the CSV has a header row.')
        .add('csv_delimiter', 'str', default=',', description='CSV field delimiter.')
        .add('csv_on_error', 'str', default='abort', choices=('abort', 'skip'), description='Malformed-row policy.')
        .add('features_precomputed', 'bool', default=False, description='Features were cached in advance; excluded from wall time.')
        # kSGD
        .add('ksgd_tuning', 'list[str]', default=['fixed'], choices=TUNINGS, description='kSGD tuning strategies; one run each.')
        .add('ksgd_gamma2', 'float', default=1.0, description='Fixed-strategy gamma^2.')
        .add('ksgd_decay_p', 'float', default=1.0, description='Decay-strategy exponent.')
        .add('adaptive_lower', 'float', default=1e-4, description='Adaptive clamp floor L.')
        .add('adaptive_upper', 'float', default=1e4, description='Adaptive clamp ceiling U.')
        .add('adaptive_threshold', 'float', default=10.0, description='Soft-threshold pivot T.')
        .add('adaptive_delay_trace', 'float', default=0.0, description='Estimation starts once tr(M) is at most this; 0 starts at once.')
        .add('ksgd_m0_scale', 'float', default=1.0, description='Initial covariance scale c in M0 = c I.')
        .add('ksgd_check_spd', 'bool', default=False, description='Check positive definiteness after every step.')
        # SGD
        .add('sgd_p', 'float', default=1.0, description='SGD decay exponent p.')
        .add('sgd_c1', 'float', default=0.0, description='SGD constant-phase rate c1.')
        .add('sgd_c2', 'float', default=0.0, description='SGD constant-phase length c2 (inf allowed).')
        .add('sgd_c3', 'float', default=0.01, description='SGD decaying-phase scale c3.')
        .add('sgd_epochs', 'int', default=1, description='SGD passes over the data.')
        .add('sgd_grid', 'bool', default=False, description="Pick the 'sgd' schedule by grid search first.")
        .add('sgd_grid_p', 'list[float]', default=[0.5, 0.75, 1.0], description='Grid values of p.')
        .add('sgd_grid_c1', 'list[float]', default=[0.0, 0.01], description='Grid values of c1.')
        .add('sgd_grid_c2', 'list[float]', default=[0.0, 1e5], description='Grid values of c2.')
        .add('sgd_grid_c3', 'list[float]', default=[1e-3, 1e-2, 1e-1, 1.0], description='Grid values of c3.')
        # Gauss-Newton logistic
        .add('gn_threshold_init', 'float', default=15.0, description='Trace threshold of the first GN subproblem.')
        .add('gn_shrink_factor', 'float', default=5.0, description='Threshold divisor between GN subproblems.')
        .add('gn_inner_gamma2', 'float', default=0.1, description='Inner kSGD gamma^2.')
        .add('gn_max_outer', 'int', default=10, description='Maximum GN subproblems.')
        .add('gn_escalate', 'bool', default=False, description='Escalate the inner gamma^2 from 1e-4 until the fit succeeds.')
        # featurization
        .add('raw_columns', 'list[str]', default=[], description='Numeric input columns for the wavelet map or passthrough.')
        .add('wavelet_resolutions', 'list[int]', description='Haar scales per raw column.')
        .add('wavelet_intercept', 'bool', default=False, description='Prepend an intercept to wavelet features.')
        .add('categorical_schema', 'mapping', description='Column name to vocabulary list.')
        .add('continuous_columns', 'list[str]', default=[], description='Columns passed through after the one-hot blocks.')
        .add('categorical_intercept', 'bool', default=False, description='Prepend an intercept to one-hot features.')
        .add('unseen_category', 'str', default='error', choices=('error', 'zeros'), description='Policy for categories outside the vocabulary.')
        .add('featurize_output', 'path', description='Featurized CSV path; defaults to <out>/features.csv.')
        # Monte-Carlo
        .add('mc_snapshots', 'list[int]', description='Steps k at which mc-cov reports; defaults to powers of two up to count.')
        .build()
    )


#: Sources searched for an option value, highest priority first.
SOURCE_ORDER = ('cli', 'env', 'file')


def merge_sources(
    spec: ConfigSpec,
    cli:  Mapping[str, Any],
    env:  Mapping[str, Any],
    file: Mapping[str, Any],
) -> tuple[Dict[str, Any], Dict[str, str]]:
    """
    Resolve every option of `spec` from the first source in `SOURCE_ORDER`
    that sets it, falling back to the coerced default.

    Returns:
        tuple[dict[str, Any], dict[str, str]]:
            Resolved values, and for each option the source it came from
            ('cli', 'env', 'file' or 'default').
    """
    layers = {'cli': cli, 'env': env, 'file': file}
    values: Dict[str, Any] = {}
    origin: Dict[str, str] = {}
    for opt in spec:
        source = next((name for name in SOURCE_ORDER if opt.name in layers[name]), None)
        values[opt.name] = layers[source][opt.name] if source else opt.coerce(opt.default)
        origin[opt.name] = source or 'default'
    return values, origin


class BenchConfig:
    """
    Resolved benchmark configuration.

    Parameters:
        spec (Optional[ConfigSpec]):
            Option catalogue. Defaults to `bench_spec()`.

    Attributes:
        values (dict[str, Any]):
            Option names mapped to resolved values.

        sources (dict[str, str]):
            Option names mapped to the source of their value.

    Example Usage:
        >>> cfg = BenchConfig()
        >>> cfg.load(cli_args=['--eps', '1e-6'], env={})
        >>> cfg['eps']
        1e-06
    """

    def __init__(self, spec: Optional[ConfigSpec] = None):
        self.spec                         = spec or bench_spec()
        self.values:      Dict[str, Any]  = {opt.name: opt.coerce(opt.default) for opt in self.spec.options}
        self.sources:     Dict[str, str]  = dict.fromkeys(self.values, 'default')
        self.config_path: Optional[Path]  = None

    def __repr__(self) -> str:
        return f'<BenchConfig {self.config_path}>'

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def load(
        self,
        cli_args:  Optional[List[str]] = None,
        env:       Optional[Mapping[str, str]] = None,
        file_path: Optional[str | Path] = None,
    ) -> BenchConfig:
        """
        Resolve every option from the command line, environment, a config
        file and the defaults, in that priority order.

        The config file is `file_path`, else the resolved ``config`` option.

        Raises:
            ConfigError:
                On unknown keys in the file, malformed values, or a missing
                required option.
        """
        env = os.environ if env is None else env
        cli_data = parse_cli(self.spec, cli_args or [])
        env_data = parse_env(self.spec, env)

        path = file_path or cli_data.get('config') or env_data.get('config')
        file_data = self._coerce_file(load_file(path)) if path else {}

        self.values, self.sources = merge_sources(self.spec, cli_data, env_data, file_data)
        overrides = {name: source for name, source in self.sources.items() if source != 'default'}
        if overrides:
            log.debug('Options set outside the defaults: %s', overrides)
        self.config_path = Path(path) if path else None

        missing = [o.name for o in self.spec.options if o.required and self.values[o.name] is None]
        if missing:
            raise ConfigError(f'Missing required options: {", ".join(missing)}')
        return self

    def _coerce_file(self, raw: Dict[str, Any]) -> Dict[str, Any]:
        unknown = sorted(set(raw) - set(self.spec.names))
        if unknown:
            raise ConfigError(f'Unknown keys in config file: {", ".join(unknown)}')
        return {name: self.spec.get_option(name).coerce(value) for name, value in raw.items()}

    def as_dict(self) -> Dict[str, Any]:
        return dict(self.values)

    def echo(self) -> Dict[str, Any]:
        """Resolved values as builtins, without the ``config`` pointer itself."""
        return {k: plain(v) for k, v in self.values.items() if k != 'config'}

    def config_hash(self) -> str:
        canonical = json.dumps(self.echo(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def save_yaml(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_yaml(self.echo()), encoding='utf-8')
        return path


__all__ = [
    'BenchConfig',
    'LOG_LEVELS',
    'METHODS',
    'SOURCE_ORDER',
    'TUNINGS',
    'bench_spec',
    'merge_sources',
]
