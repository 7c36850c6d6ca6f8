from __future__ import annotations

import argparse
import json
import re
from pathlib import Path
from typing import Any, Dict, List, Mapping

import yaml

from kalman_sgd.config.conf_spec import ConfigSpec
from kalman_sgd.errors import ConfigError


#: A token that is a negative number or a list starting with one, e.g. ``-1,2`` or ``-inf``.
NEGATIVE_VALUE = re.compile(r'-(?:\d|\.\d|inf|nan)', re.IGNORECASE)


def attach_negative_values(args: List[str], value_flags: set[str]) -> List[str]:
    """
    Rewrite ``--flag -1,2`` as ``--flag=-1,2``.

    argparse takes a token such as ``-1,2`` for an option, so a value flag
    followed by a negative value would otherwise lose its value. Tokens after
    ``--`` are left alone.
    """
    out: List[str] = []
    i = 0
    while i < len(args):
        arg = args[i]
        if arg == '--':
            out.extend(args[i:])
            break
        if arg in value_flags and i + 1 < len(args) and NEGATIVE_VALUE.match(args[i + 1]):
            out.append(f'{arg}={args[i + 1]}')
            i += 2
            continue
        out.append(arg)
        i += 1
    return out


def parse_cli(spec: ConfigSpec, args: List[str], *, strict: bool = True) -> Dict[str, Any]:
    """
    Parse the options of `spec` from command-line arguments.

    Only flags actually given appear in the result. Boolean options accept
    ``--flag`` and ``--no-flag``. Negative values may follow their flag
    directly (``--beta-star -1,2``) or be attached (``--beta-star=-1,2``).

    Raises:
        ConfigError:
            On a malformed flag value, or an unknown argument when `strict`.
    """
    parser = argparse.ArgumentParser(add_help=False, exit_on_error=False, allow_abbrev=False)
    value_flags: set[str] = set()
    for opt in spec.options:
        flags = [flag for flag in (opt.cli or []) if flag]
        if not flags:
            continue
        if not opt.is_bool:
            value_flags.update(flags)
        kwargs: Dict[str, Any] = {'dest': opt.name, 'default': None}
        if opt.is_bool:
            kwargs['action'] = argparse.BooleanOptionalAction
        parser.add_argument(*flags, **kwargs)

    try:
        parsed, unknown = parser.parse_known_args(attach_negative_values(list(args), value_flags))
    except argparse.ArgumentError as exc:
        raise ConfigError(f'Invalid command line: {exc}') from exc
    if strict and unknown:
        raise ConfigError(f'Unknown command-line arguments: {" ".join(unknown)}')

    result: Dict[str, Any] = {}
    for name, raw in vars(parsed).items():
        if raw is None:
            continue
        result[name] = spec.get_option(name).coerce(raw)
    return result


def parse_env(spec: ConfigSpec, env: Mapping[str, str]) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for opt in spec.options:
        if opt.env and opt.env in env:
            result[opt.name] = opt.coerce(env[opt.env])
    return result


def load_file(path: str | Path) -> Dict[str, Any]:
    """
    Read a flat key/value config file (YAML or JSON).

    Raises:
        ConfigError:
            If the file is missing, has an unsupported suffix, does not parse,
            or is not a mapping.
    """
    if not path:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f'Config file not found: {path}')
    text = path.read_text(encoding='utf-8')
    try:
        if path.suffix in {'.yaml', '.yml'}:
            data = yaml.safe_load(text) or {}
        elif path.suffix == '.json':
            data = json.loads(text)
        else:
            raise ConfigError(f"Unsupported config file type '{path.suffix}' for {path}; use .yaml, .yml or .json")
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f'Could not parse config file {path}: {exc}') from exc
    if not isinstance(data, dict):
        raise ConfigError(f'Config file {path} must hold a mapping of option names to values')
    return data


__all__ = [
    'NEGATIVE_VALUE',
    'attach_negative_values',
    'load_file',
    'parse_cli',
    'parse_env',
]
