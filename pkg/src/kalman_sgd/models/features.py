"""
Feature maps: Haar wavelets without shifts and one-hot categorical encoding.

Classes:
    WaveletConfig
    UnseenPolicy
    CategoricalSchema
    ModelKind
    ModelSpec

Functions:
    haar_psi
    haar_features
    haar_feature_matrix
    encode_categoricals

Since:
    v0.1.0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from kalman_sgd.errors import DimensionError, DomainError, ParameterError, SchemaError


@dataclass(slots=True, frozen=True)
class WaveletConfig:
    """
    Haar expansion settings.

    Parameters:
        per_variable_resolution (Sequence[int]):
            Number of dyadic scales per raw input, each at least 1.

        include_intercept (bool):
            Prepend a constant 1 feature.
    """

    per_variable_resolution: tuple[int, ...]
    include_intercept: bool = False

    def __post_init__(self) -> None:
        resolutions = tuple(int(r) for r in self.per_variable_resolution)
        if not resolutions:
            raise ParameterError('Wavelet config needs at least one input variable')
        if any(r < 1 for r in resolutions):
            raise ParameterError(f'Every wavelet resolution must be at least 1, got {resolutions}')
        object.__setattr__(self, 'per_variable_resolution', resolutions)

    @property
    def inputs(self) -> int:
        return len(self.per_variable_resolution)

    @property
    def dimension(self) -> int:
        return sum(self.per_variable_resolution) + int(self.include_intercept)


def haar_psi(t: np.ndarray) -> np.ndarray:
    """Haar mother wavelet: 1 on [0, 1/2), -1 on [1/2, 1), 0 elsewhere."""
    t = np.asarray(t, dtype=float)
    return np.where((t >= 0.0) & (t < 0.5), 1.0, np.where((t >= 0.5) & (t < 1.0), -1.0, 0.0))


def haar_feature_matrix(raw: np.ndarray, config: WaveletConfig) -> np.ndarray:
    """
    Row-wise `haar_features` for an (N, d) matrix of raw inputs in [0, 1].

    Raises:
        DimensionError:
            If the column count differs from the number of configured inputs.

        DomainError:
            If any raw value lies outside [0, 1].
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[1] != config.inputs:
        raise DimensionError(f'Wavelet config expects {config.inputs} inputs, got {raw.shape[1]}')
    if not np.all((raw >= 0.0) & (raw <= 1.0)):
        raise DomainError('Raw wavelet inputs must be pre-scaled into [0, 1]')

    columns = [np.ones((raw.shape[0], 1))] if config.include_intercept else []
    for i, resolution in enumerate(config.per_variable_resolution):
        scaled = raw[:, i:i + 1] * 2.0 ** np.arange(resolution)
        columns.append(haar_psi(scaled - np.floor(scaled)))
    return np.hstack(columns)


def haar_features(raw: Sequence[float] | np.ndarray, config: WaveletConfig) -> np.ndarray:
    """
    Additive Haar features of one raw input vector.

    Variable i contributes ``psi(frac(2**j * u_i))`` for ``j = 0 .. r_i - 1``,
    after an optional leading intercept.

    Example Usage:
        >>> haar_features([0.25], WaveletConfig((1,)))
        array([1.])
    """
    return haar_feature_matrix(np.asarray(raw, dtype=float).reshape(1, -1), config)[0]


class UnseenPolicy(str, Enum):
    ERROR = 'error'
    ZEROS = 'zeros'


@dataclass(slots=True, frozen=True)
class CategoricalSchema:
    """
    One-hot layout of a mixed record.

    The encoded vector is the optional intercept, then the full dummy set of
    each categorical column in schema order, then the continuous columns.
    No reference level is dropped.

    Parameters:
        categoricals (Mapping[str, Sequence[str]]):
            Column name to its ordered vocabulary.

        continuous (Sequence[str]):
            Columns passed through as floats.

        include_intercept (bool):
            Prepend a constant 1 feature.

        unseen (UnseenPolicy):
            'error' raises on a value outside the vocabulary, 'zeros' encodes
            it as all zeros.
    """

    categoricals: dict[str, tuple[str, ...]] = field(default_factory=dict)
    continuous: tuple[str, ...] = ()
    include_intercept: bool = False
    unseen: UnseenPolicy = UnseenPolicy.ERROR

    def __post_init__(self) -> None:
        vocabularies = {}
        for column, vocabulary in dict(self.categoricals).items():
            levels = tuple(str(level) for level in vocabulary)
            if not levels:
                raise SchemaError(f"Categorical column '{column}' has an empty vocabulary")
            if len(set(levels)) != len(levels):
                raise SchemaError(f"Categorical column '{column}' repeats a level: {levels}")
            vocabularies[str(column)] = levels
        object.__setattr__(self, 'categoricals', vocabularies)
        object.__setattr__(self, 'continuous', tuple(self.continuous))
        object.__setattr__(self, 'unseen', UnseenPolicy(self.unseen))
        overlap = set(vocabularies) & set(self.continuous)
        if overlap:
            raise SchemaError(f'Columns declared both categorical and continuous: {sorted(overlap)}')

    @property
    def dimension(self) -> int:
        return int(self.include_intercept) + sum(len(v) for v in self.categoricals.values()) + len(self.continuous)


def encode_categoricals(record: Mapping[str, object], schema: CategoricalSchema) -> np.ndarray:
    """
    Encode a record as intercept, one-hot blocks and continuous values.

    Raises:
        SchemaError:
            If the record lacks a schema column.

        DomainError:
            On an unseen category under the 'error' policy, or a continuous
            value that does not parse as a finite float.
    """
    out = np.zeros(schema.dimension)
    pos = 0
    if schema.include_intercept:
        out[0] = 1.0
        pos = 1

    for column, vocabulary in schema.categoricals.items():
        if column not in record:
            raise SchemaError(f"Record has no column '{column}'")
        value = str(record[column]).strip()
        if value in vocabulary:
            out[pos + vocabulary.index(value)] = 1.0
        elif schema.unseen is UnseenPolicy.ERROR:
            raise DomainError(f"Unseen category '{value}' in column '{column}'; known: {list(vocabulary)}")
        pos += len(vocabulary)

    for column in schema.continuous:
        if column not in record:
            raise SchemaError(f"Record has no column '{column}'")
        try:
            value = float(record[column])
        except (TypeError, ValueError):
            raise DomainError(f"Column '{column}' holds non-numeric value {record[column]!r}") from None
        if not np.isfinite(value):
            raise DomainError(f"Column '{column}' holds non-finite value {value!r}")
        out[pos] = value
        pos += 1

    return out


class ModelKind(str, Enum):
    LINEAR = 'linear'
    LOGISTIC_GN = 'logistic_gn'
    WAVELET_LINEAR = 'wavelet_linear'


@dataclass(slots=True, frozen=True)
class ModelSpec:
    """
    Which regression to fit and how raw records become feature vectors.

    Parameters:
        kind (ModelKind):
            'linear', 'logistic_gn' or 'wavelet_linear'.

        wavelet (Optional[WaveletConfig]):
            Required for 'wavelet_linear'.

        categorical (Optional[CategoricalSchema]):
            One-hot layout for records with categorical columns.

        raw_columns (Sequence[str]):
            Numeric columns fed to the wavelet map, or passed through as-is
            when neither map is configured.
    """

    kind: ModelKind = ModelKind.LINEAR
    wavelet: Optional[WaveletConfig] = None
    categorical: Optional[CategoricalSchema] = None
    raw_columns: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        object.__setattr__(self, 'raw_columns', tuple(self.raw_columns))
        if self.kind is ModelKind.WAVELET_LINEAR:
            if self.wavelet is None:
                raise ParameterError("Model 'wavelet_linear' needs a wavelet config")
            if len(self.raw_columns) != self.wavelet.inputs:
                raise ParameterError(
                    f'Wavelet config has {self.wavelet.inputs} resolutions but '
                    f'{len(self.raw_columns)} raw columns were given'
                )

    @property
    def dimension(self) -> int:
        if self.kind is ModelKind.WAVELET_LINEAR:
            return self.wavelet.dimension
        if self.categorical is not None:
            return self.categorical.dimension
        return len(self.raw_columns)

    def featurize(self, record: Mapping[str, object]) -> np.ndarray:
        if self.kind is ModelKind.WAVELET_LINEAR:
            try:
                raw = [float(record[c]) for c in self.raw_columns]
            except KeyError as exc:
                raise SchemaError(f'Record has no column {exc}') from None
            except (TypeError, ValueError) as exc:
                raise DomainError(f'Non-numeric wavelet input ({exc})') from None
            return haar_features(raw, self.wavelet)
        if self.categorical is not None:
            return encode_categoricals(record, self.categorical)
        return encode_categoricals(record, CategoricalSchema(continuous=self.raw_columns))


__all__ = [
    'CategoricalSchema',
    'ModelKind',
    'ModelSpec',
    'UnseenPolicy',
    'WaveletConfig',
    'encode_categoricals',
    'haar_feature_matrix',
    'haar_features',
    'haar_psi',
]
