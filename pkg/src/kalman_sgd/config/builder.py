from __future__ import annotations

from typing import Any, Optional, Sequence

from kalman_sgd.config.conf_spec import ConfigSpec
from kalman_sgd.config.opt_spec import OptionSpec


ENV_PREFIX = 'KSGD_'


def cli_flag_for(name: str) -> str:
    """Config key to CLI flag: ``max_obs`` becomes ``--max-obs``."""
    return '--' + name.replace('_', '-')


def env_name_for(name: str, prefix: str = ENV_PREFIX) -> str:
    """Config key to environment variable: ``max_obs`` becomes ``KSGD_MAX_OBS``."""
    return prefix + name.upper()


class ConfigBuilder:
    """
    Fluent builder for ConfigSpec.

    Every option added gets a CLI flag and an environment variable derived
    from its name unless they are given explicitly, so config-file keys,
    flags and variables stay in one-to-one correspondence.

    Parameters:
        env_prefix (str):
            Prefix of derived environment variables.

    Example:
        >>> spec = (
        ...     ConfigBuilder()
        ...     .add('seed', 'int', default=0, description='Master seed.')
        ...     .add('eps', 'float', default=1e-8)
        ...     .build()
        ... )
        >>> spec.get_option('eps').cli
        ['--eps']
        >>> spec.get_option('eps').env
        'KSGD_EPS'
    """

    def __init__(self, env_prefix: str = ENV_PREFIX) -> None:
        self.env_prefix = env_prefix
        self._options: list[OptionSpec] = []

    def add(
        self,
        name:        str,
        type:        str,
        *,
        default:     Any = None,
        env:         Optional[str] = None,
        cli:         str | list[str] | None = None,
        required:    bool = False,
        description: str = 'No description provided.',
        choices:     Optional[Sequence[Any]] = None,
    ) -> ConfigBuilder:
        self._options.append(OptionSpec(
            name=name,
            type=type,
            default=default,
            env=env or env_name_for(name, self.env_prefix),
            cli=cli or cli_flag_for(name),
            required=required,
            description=description,
            choices=choices,
        ))
        return self

    def build(self) -> ConfigSpec:
        """Validate and return the spec; raises ConfigError on an inconsistent option set."""
        return ConfigSpec(list(self._options))


__all__ = [
    'ConfigBuilder',
    'ENV_PREFIX',
    'cli_flag_for',
    'env_name_for',
]
