from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from kalman_sgd.config.opt_spec import OptionSpec
from kalman_sgd.config.validator import validate_spec


@dataclass(slots=True, frozen=True)
class ConfigSpec:
    """
    The full set of options a benchmark command understands.

    The option list is validated once, on construction, by
    `kalman_sgd.config.validator.validate_spec`; a spec that exists is
    internally consistent (unique names, flags and environment variables,
    defaults that coerce to their type).

    Parameters:
        options (list[OptionSpec]):
            Options in declaration order; help output keeps this order.

    Raises:
        ConfigError:
            If validation fails.
    """

    options: list[OptionSpec] = field(default_factory=list)
    _by_name: dict[str, OptionSpec] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        validate_spec(self)
        object.__setattr__(self, '_by_name', {o.name: o for o in self.options})

    def get_option(self, name: str) -> Optional[OptionSpec]:
        return self._by_name.get(name)

    @property
    def names(self) -> list[str]:
        return [o.name for o in self.options]

    def __iter__(self) -> Iterator[OptionSpec]:
        return iter(self.options)

    def __len__(self) -> int:
        return len(self.options)


__all__ = ['ConfigSpec']
