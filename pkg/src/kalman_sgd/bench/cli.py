"""
``ksgd-bench``: command-line front end of the benchmark.

Usage::

    ksgd-bench run       [--config PATH] [--seed INT] [--out DIR] [--eps FLOAT] [--max-obs INT] ...
    ksgd-bench mc-cov    [options]
    ksgd-bench featurize [options]
    ksgd-bench grid-sgd  [options]

Every subcommand accepts every option; values resolve from flags, then
``KSGD_*`` environment variables, then the config file, then defaults.
Errors exit with the category code of the raised error.

Since:
    v0.1.0
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

from kalman_sgd.baselines import best_result, grid_search
from kalman_sgd.bench.experiment import run_experiment
from kalman_sgd.bench.monte_carlo import default_snapshots, monte_carlo_covariance
from kalman_sgd.bench.outputs import emit_outputs, versions, write_manifest, write_rows
from kalman_sgd.bench.settings import ExperimentConfig, model_spec_from_values
from kalman_sgd.config import BenchConfig, ConfigSpec, bench_spec, to_yaml
from kalman_sgd.data import as_arrays, stream_records, write_observations
from kalman_sgd.errors import ConfigError, KsgdError, SchemaError, UnsupportedError


log = logging.getLogger(__name__)


PROG = 'ksgd-bench'


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s %(levelname)-8s %(name)s: %(message)s',
        force=True,
    )


def _experiment(cfg: BenchConfig) -> ExperimentConfig:
    return ExperimentConfig.from_values(cfg.values, config_hash=cfg.config_hash())


def _write_side_files(cfg: BenchConfig, out: Path, files: list[Path], **extra) -> None:
    config_path = cfg.save_yaml(out / 'config.yaml')
    files.append(config_path)
    write_manifest(out / 'manifest.json', {
        'versions': versions(),
        'config': cfg.echo(),
        'config_hash': cfg.config_hash(),
        'files': [str(p.relative_to(out)) for p in files],
        **extra,
    })


# ---------- Subcommands ----------

def cmd_run(cfg: BenchConfig) -> int:
    exp = _experiment(cfg)
    result = run_experiment(exp)
    emit_outputs(
        result,
        exp.out,
        config_echo=cfg.echo(),
        config_hash=exp.config_hash,
        features_precomputed=exp.features_precomputed,
    )
    failed = [f'{row.method}#{row.replication}' for row in result.summary if row.status != 'ok']
    if failed:
        log.error('Failed method runs: %s', ', '.join(failed))
        return 1
    return 0


def cmd_mc_cov(cfg: BenchConfig) -> int:
    if cfg['problem'] != 'linear':
        raise UnsupportedError('mc-cov needs a linear problem')
    if cfg['data_source'] != 'synthetic':
        raise UnsupportedError('mc-cov needs a synthetic source; the true parameter of a CSV file is unknown')
    exp = _experiment(cfg)

    snapshots = list(exp.mc_snapshots) if exp.mc_snapshots else default_snapshots(exp.count)
    result = monte_carlo_covariance(
        exp.source,
        exp.strategy(exp.tunings[0]),
        exp.replications,
        snapshots,
        beta0=exp.beta0,
        m0_scale=exp.m0_scale,
        seed=exp.seed,
    )
    rows = ((s.k, s.trace_M, s.trace_empirical, s.trace_ratio, s.excess_risk) for s in result.snapshots)
    files = [write_rows(exp.out / 'mc_cov.csv', ('k', 'trace_M', 'trace_empirical', 'trace_ratio', 'excess_risk'), rows)]
    _write_side_files(cfg, exp.out, files)
    last = result.snapshots[-1]
    log.info('mc-cov: %d replications, k=%d, tr(M)=%.4e, ratio=%s', result.replications, last.k, last.trace_M, last.trace_ratio)
    return 0


def cmd_featurize(cfg: BenchConfig) -> int:
    if cfg['csv_path'] is None:
        raise ConfigError('featurize needs csv_path, the raw input file')
    model = model_spec_from_values(cfg.values)
    out = Path(cfg['out'])
    target = Path(cfg['featurize_output']) if cfg['featurize_output'] else out / 'features.csv'
    response = cfg['csv_response']
    skip = cfg['csv_on_error'] == 'skip'
    skipped = 0

    def rows():
        nonlocal skipped
        for line, record in enumerate(stream_records(cfg['csv_path'], cfg['csv_delimiter']), start=2):
            try:
                if response not in record:
                    raise SchemaError(f'Record has no response column {response!r}')
                yield model.featurize(record), float(record[response])
            except (KsgdError, ValueError) as exc:
                if not skip:
                    raise SchemaError(f'{cfg["csv_path"]}, line {line}: {exc}') from exc
                skipped += 1
                log.warning('Skipping line %d of %s: %s', line, cfg['csv_path'], exc)

    started = time.perf_counter()
    count = write_observations(target, rows(), delimiter=cfg['csv_delimiter'])
    elapsed = time.perf_counter() - started
    log.info('Featurized %d records into %d features in %.3fs (%d skipped) -> %s',
             count, model.dimension, elapsed, skipped, target)

    files = [target] if target.is_relative_to(out) else []
    _write_side_files(cfg, out, files, featurize_seconds=elapsed, dimension=model.dimension,
                      rows=count, skipped=skipped, output=str(target))
    return 0


def cmd_grid_sgd(cfg: BenchConfig) -> int:
    if cfg['problem'] != 'linear':
        raise UnsupportedError('grid-sgd tunes the least-squares SGD baseline; use a linear problem')
    exp = _experiment(cfg)
    X, y = as_arrays(exp.dataset(0))
    results = grid_search(X, y, exp.sgd_schedules, epochs=exp.sgd_epochs, workers=exp.workers)

    rows = ((r.schedule.p, r.schedule.c1, r.schedule.c2, r.schedule.c3, r.objective, r.status) for r in results)
    files = [write_rows(exp.out / 'sgd_grid.csv', ('p', 'c1', 'c2', 'c3', 'objective', 'status'), rows)]
    best = best_result(results)
    best_path = exp.out / 'sgd_best.yaml'
    best_path.write_text(to_yaml({f'sgd_{k}': v for k, v in best.schedule.as_dict().items()}), encoding='utf-8')
    files.append(best_path)
    _write_side_files(cfg, exp.out, files, best_objective=best.objective)
    log.info('Best SGD schedule %s with objective %.6g', best.schedule.as_dict(), best.objective)
    return 0


COMMANDS: dict[str, tuple[Callable[[BenchConfig], int], str]] = {
    'run': (cmd_run, 'Run the configured methods and write traces, summary and manifest.'),
    'mc-cov': (cmd_mc_cov, 'Monte-Carlo estimate of the estimator covariance (shared features).'),
    'featurize': (cmd_featurize, 'Cache wavelet or one-hot features of a raw CSV.'),
    'grid-sgd': (cmd_grid_sgd, 'Grid-search the SGD learning-rate schedule.'),
}


# ---------- Entry point ----------

def build_parser(spec: ConfigSpec) -> argparse.ArgumentParser:
    """Parser used for help output; option values are resolved by BenchConfig."""
    parser = argparse.ArgumentParser(prog=PROG, description='kSGD benchmark harness.')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    for name, (_, help_text) in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text, description=help_text)
        group = cmd.add_argument_group('options', 'Environment variable in brackets.')
        for opt in spec.options:
            kwargs = {'help': f'{opt.description} [{opt.env}]', 'default': argparse.SUPPRESS}
            if opt.is_bool:
                kwargs['action'] = argparse.BooleanOptionalAction
            else:
                kwargs['metavar'] = opt.type.upper()
            group.add_argument(*opt.cli, **kwargs)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    spec = bench_spec()
    parser = build_parser(spec)

    if not argv or argv[0] in {'-h', '--help'}:
        parser.print_help(sys.stdout if argv else sys.stderr)
        return 0 if argv else 1
    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        parser.print_usage(sys.stderr)
        print(f"{PROG}: error: unknown command '{command}' (choose from {', '.join(COMMANDS)})", file=sys.stderr)
        return 1
    if '-h' in rest or '--help' in rest:
        parser.parse_args([command, '--help'])

    try:
        cfg = BenchConfig(spec).load(cli_args=rest)
        configure_logging(cfg['log_level'])
        log.debug('%s %s with config hash %s', PROG, command, cfg.config_hash())
        return COMMANDS[command][0](cfg)
    except KsgdError as exc:
        print(f'{PROG} {command}: {type(exc).__name__}: {exc}', file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f'{PROG} {command}: {exc}', file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
