from kalman_sgd.bench.settings import CsvSource, ExperimentConfig, model_spec_from_values, replication_seed
from kalman_sgd.bench.experiment import (
    ExperimentResult,
    SUMMARY_COLUMNS,
    SummaryRow,
    flop_proxy,
    ksgd_labels,
    run_experiment,
    run_replication,
)
from kalman_sgd.bench.outputs import TRACE_HEADER, emit_outputs, write_summary_csv, write_trace_csv
from kalman_sgd.bench.monte_carlo import McResult, McSnapshot, default_snapshots, monte_carlo_covariance


__all__ = [
    'CsvSource',
    'ExperimentConfig',
    'ExperimentResult',
    'McResult',
    'McSnapshot',
    'SUMMARY_COLUMNS',
    'SummaryRow',
    'TRACE_HEADER',
    'default_snapshots',
    'emit_outputs',
    'flop_proxy',
    'ksgd_labels',
    'model_spec_from_values',
    'monte_carlo_covariance',
    'replication_seed',
    'run_experiment',
    'run_replication',
    'write_summary_csv',
    'write_trace_csv',
]
