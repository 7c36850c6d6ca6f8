"""
Exception hierarchy shared by every kalman-sgd module.

Each concrete error also derives from the built-in exception a caller would
naturally catch (``ValueError`` for bad input, ``ArithmeticError`` for
numerical trouble), and carries an ``exit_code`` used by ``ksgd-bench``.

Since:
    v0.1.0
"""
from __future__ import annotations


class KsgdError(Exception):
    """
    Base class for all kalman-sgd errors.

    Attributes:
        exit_code (int):
            Process exit code reported by the CLI for this error category.
    """

    exit_code: int = 1


class ConfigError(KsgdError, ValueError):
    """Unparsable or invalid experiment configuration."""

    exit_code = 2


class SchemaError(KsgdError, ValueError):
    """CSV header or row does not match the declared schema."""

    exit_code = 3


class DimensionError(KsgdError, ValueError):
    """Non-positive dimension or mismatched vector/matrix shapes."""

    exit_code = 4


class ParameterError(KsgdError, ValueError):
    """Tuning, schedule or solver parameters outside their valid range."""

    exit_code = 4


class DomainError(KsgdError, ValueError):
    """Input outside the documented domain of an operation."""

    exit_code = 4


class NumericalError(KsgdError, ArithmeticError):
    """Non-finite update, loss of positive definiteness or solver failure."""

    exit_code = 5


class UnsupportedError(KsgdError, ValueError):
    """The operation is not defined for the given input."""

    exit_code = 6


class UsageError(KsgdError, RuntimeError):
    """The API was called in a way its contract forbids."""

    exit_code = 1


__all__ = [
    'ConfigError',
    'DimensionError',
    'DomainError',
    'KsgdError',
    'NumericalError',
    'ParameterError',
    'SchemaError',
    'UnsupportedError',
    'UsageError',
]
