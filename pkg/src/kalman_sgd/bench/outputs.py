"""
Plot-ready output files of an experiment.

Layout of the output directory::

    traces/<method>__rep<r>.csv   one trace per method and replication
    summary.csv                   one row per method and replication
    manifest.json                 versions, config echo and hash, file list
    config.yaml                   resolved configuration, re-runnable

Floats are written with ``repr`` precision; a missing value is an empty
field, never 0.

Since:
    v0.1.0
"""
from __future__ import annotations

import csv
import json
import logging
import platform
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import numpy as np
import scipy
import yaml

from kalman_sgd.bench.experiment import SUMMARY_COLUMNS, ExperimentResult, SummaryRow
from kalman_sgd.config import to_yaml
from kalman_sgd.core import RunTrace
from kalman_sgd.errors import UsageError


log = logging.getLogger(__name__)


TRACE_HEADER = ('method', 'adp', 'wall_seconds', 'objective', 'trace_M', 'gamma2')


def fmt(value: Any) -> str:
    """One CSV field: empty for None, ``repr`` for floats."""
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(path: str | Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_trace_csv(trace: RunTrace, path: str | Path) -> Path:
    """Write one trace with header ``method,adp,wall_seconds,objective,trace_M,gamma2``."""
    rows = ((trace.method, r.adp, r.wall_seconds, r.objective, r.trace_M, r.gamma2) for r in trace)
    return write_rows(Path(path), TRACE_HEADER, rows)


def write_summary_csv(rows: Iterable[SummaryRow], path: str | Path) -> Path:
    return write_rows(Path(path), SUMMARY_COLUMNS, ([getattr(row, c) for c in SUMMARY_COLUMNS] for row in rows))


def trace_filename(method: str, replication: int) -> str:
    return f'{method}__rep{replication}.csv'


def versions() -> dict[str, str]:
    from kalman_sgd import __version__

    return {
        'kalman_sgd': __version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pyyaml': yaml.__version__,
    }


def write_manifest(path: str | Path, manifest: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path


def emit_outputs(
    result:               ExperimentResult,
    out_dir:              str | Path,
    *,
    config_echo:          Optional[Mapping[str, Any]] = None,
    config_hash:          str = '',
    features_precomputed: bool = False,
) -> list[Path]:
    """
    Write traces, summary, manifest and the config echo under `out_dir`.

    Parameters:
        result (ExperimentResult):
            Output of `run_experiment`; must hold at least one trace.

        out_dir (str | Path):
            Output directory, created when missing.

        config_echo (Optional[Mapping[str, Any]]):
            Resolved option values, written to ``config.yaml`` and the manifest.

        config_hash (str):
            Hash of the resolved configuration.

        features_precomputed (bool):
            Whether wall times exclude featurization; recorded in the manifest.

    Returns:
        list[Path]:
            Every file written, manifest last.

    Raises:
        UsageError:
            If `result` holds no traces.

        OSError:
            If the directory is not writable.
    """
    if not result.traces:
        raise UsageError('No traces to write: every method failed or none ran')
    out = Path(out_dir)
    written: list[Path] = []

    for replication, trace in result.traces:
        written.append(write_trace_csv(trace, out / 'traces' / trace_filename(trace.method, replication)))
    written.append(write_summary_csv(result.summary, out / 'summary.csv'))
    if config_echo is not None:
        config_path = out / 'config.yaml'
        config_path.write_text(to_yaml(dict(config_echo)), encoding='utf-8')
        written.append(config_path)

    manifest = {
        'versions': versions(),
        'config': dict(config_echo) if config_echo is not None else {},
        'config_hash': config_hash,
        'features_precomputed': features_precomputed,
        'wall_time_includes_featurization': not features_precomputed,
        'files': [str(p.relative_to(out)) for p in written],
    }
    written.append(write_manifest(out / 'manifest.json', manifest))
    log.info('Wrote %d files to %s', len(written), out)
    return written


__all__ = [
    'TRACE_HEADER',
    'emit_outputs',
    'fmt',
    'trace_filename',
    'versions',
    'write_manifest',
    'write_rows',
    'write_summary_csv',
    'write_trace_csv',
]
