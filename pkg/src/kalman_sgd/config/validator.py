"""
Consistency checks run on every ConfigSpec.

Each check raises ConfigError naming the first offending option. The rules
keep the CLI, the environment and config files in one-to-one
correspondence with the option names.
"""
from __future__ import annotations

import re
from typing import TYPE_CHECKING, Callable, Sequence

from kalman_sgd.config.opt_spec import OptionSpec
from kalman_sgd.errors import ConfigError

if TYPE_CHECKING:
    from kalman_sgd.config.conf_spec import ConfigSpec


NAME_PATTERN = re.compile(r'[a-z_][a-z0-9_]*')
ENV_PATTERN  = re.compile(r'[A-Z][A-Z0-9_]*')

Check = Callable[[Sequence[OptionSpec]], None]


def check_names(options: Sequence[OptionSpec]) -> None:
    seen: set[str] = set()
    for opt in options:
        if not NAME_PATTERN.fullmatch(opt.name):
            raise ConfigError(f"Option name '{opt.name}' must be snake_case")
        if opt.name in seen:
            raise ConfigError(f"Duplicate option name: '{opt.name}'")
        seen.add(opt.name)


def check_defaults(options: Sequence[OptionSpec]) -> None:
    """Defaults must coerce to the declared type and honour `choices`."""
    for opt in options:
        if opt.default is None:
            continue
        try:
            opt.coerce(opt.default)
        except ConfigError as exc:
            raise ConfigError(f"Default of option '{opt.name}' is invalid: {exc}") from exc


def check_cli_flags(options: Sequence[OptionSpec]) -> None:
    owner: dict[str, str] = {}
    for opt in options:
        for flag in opt.cli or []:
            if not flag.startswith('--'):
                raise ConfigError(f"Option '{opt.name}' has CLI flag '{flag}' without a leading '--'")
            if flag in owner:
                raise ConfigError(f"CLI flag '{flag}' is used by both '{owner[flag]}' and '{opt.name}'")
            owner[flag] = opt.name


def check_env_names(options: Sequence[OptionSpec]) -> None:
    owner: dict[str, str] = {}
    for opt in options:
        if not opt.env:
            continue
        if not ENV_PATTERN.fullmatch(opt.env):
            raise ConfigError(f"Option '{opt.name}' has invalid environment variable '{opt.env}'")
        if opt.env in owner:
            raise ConfigError(f"Environment variable '{opt.env}' is used by both '{owner[opt.env]}' and '{opt.name}'")
        owner[opt.env] = opt.name


CHECKS: tuple[Check, ...] = (check_names, check_defaults, check_cli_flags, check_env_names)


def validate_spec(spec: ConfigSpec) -> None:
    """Run every check in `CHECKS` against `spec.options`, in order."""
    for check in CHECKS:
        check(spec.options)


__all__ = [
    'CHECKS',
    'check_cli_flags',
    'check_defaults',
    'check_env_names',
    'check_names',
    'validate_spec',
]
