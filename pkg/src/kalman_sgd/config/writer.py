from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict

import yaml


def plain(value: Any) -> Any:
    """Convert resolved option values to YAML/JSON-safe builtins."""
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


def to_yaml(data: Dict[str, Any]) -> str:
    return yaml.safe_dump(plain(data), sort_keys=True, default_flow_style=None)


__all__ = [
    'plain',
    'to_yaml',
]
