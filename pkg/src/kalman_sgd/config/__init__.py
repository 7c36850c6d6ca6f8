from kalman_sgd.config.opt_spec import OptionSpec
from kalman_sgd.config.conf_spec import ConfigSpec
from kalman_sgd.config.validator import validate_spec
from kalman_sgd.config.builder import ConfigBuilder, cli_flag_for, env_name_for
from kalman_sgd.config.loader import load_file, parse_cli, parse_env
from kalman_sgd.config.writer import plain, to_yaml
from kalman_sgd.config.bench_config import BenchConfig, bench_spec, merge_sources


__all__ = [
    'BenchConfig',
    'ConfigBuilder',
    'ConfigSpec',
    'OptionSpec',
    'bench_spec',
    'cli_flag_for',
    'env_name_for',
    'load_file',
    'merge_sources',
    'parse_cli',
    'parse_env',
    'plain',
    'to_yaml',
    'validate_spec',
]
