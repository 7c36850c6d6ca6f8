"""
Single-pass CSV ingestion.

Rows are parsed one at a time with the standard ``csv`` reader, so memory use
does not grow with file length.

Classes:
    CsvSchema
    RowPolicy
    CsvStream
    CsvDataset

Functions:
    stream_csv
    stream_records
    write_observations

Since:
    v0.1.0
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from kalman_sgd.core import Observation
from kalman_sgd.errors import DomainError, SchemaError


log = logging.getLogger(__name__)

Column = str | int


class RowPolicy(str, Enum):
    SKIP = 'skip'
    ABORT = 'abort'


@dataclass(slots=True, frozen=True)
class CsvSchema:
    """
    Which columns of a CSV file hold features and the response.

    Parameters:
        feature_columns (Sequence[str | int]):
            Column names (requires a header) or zero-based indices.

        response_column (str | int):
            Column name or index of the response.

        header (bool):
            Whether the first line is a header. Defaults to True.

        delimiter (str):
            Single-character field delimiter. Defaults to ','.

    Raises:
        SchemaError:
            If the response is among the features, or the delimiter is not a
            single character.
    """

    feature_columns: tuple[Column, ...] = field(default_factory=tuple)
    response_column: Column = 'y'
    header: bool = True
    delimiter: str = ','

    def __post_init__(self) -> None:
        object.__setattr__(self, 'feature_columns', tuple(self.feature_columns))
        if not self.feature_columns:
            raise SchemaError('CSV schema needs at least one feature column')
        if self.response_column in self.feature_columns:
            raise SchemaError(f'Response column {self.response_column!r} is also listed as a feature')
        if len(self.delimiter) != 1:
            raise SchemaError(f'Delimiter must be a single character, got {self.delimiter!r}')

    @property
    def dimension(self) -> int:
        return len(self.feature_columns)


def _resolve(columns: Sequence[Column], header: list[str] | None, path: Path) -> list[int]:
    indices = []
    for column in columns:
        if isinstance(column, int):
            indices.append(column)
            continue
        if header is None:
            raise SchemaError(f"Column '{column}' is named but {path} is read without a header")
        try:
            indices.append(header.index(column))
        except ValueError:
            raise SchemaError(f"Column '{column}' not found in header of {path}: {header}") from None
    return indices


class CsvStream:
    """
    Iterable of observations read from a CSV file in file order.

    The header is checked against the schema when the stream is created, so
    a mismatch fails before anything is yielded.

    Parameters:
        path (str | Path):
            CSV file.

        schema (CsvSchema):
            Column layout.

        on_error (RowPolicy | str):
            'abort' raises on a malformed row, 'skip' drops it and counts it.

    Attributes:
        skipped (int):
            Malformed rows dropped during the most recent iteration.
    """

    def __init__(self, path: str | Path, schema: CsvSchema, on_error: RowPolicy | str = RowPolicy.ABORT):
        self.path     = Path(path)
        self.schema   = schema
        self.on_error = RowPolicy(on_error)
        self.skipped  = 0

        if not self.path.exists():
            raise FileNotFoundError(f'No such file: {self.path}')

        header = None
        if schema.header:
            with self.path.open('r', encoding='utf-8', newline='') as f:
                header = next(csv.reader(f, delimiter=schema.delimiter), None)
            if header is None:
                raise SchemaError(f'{self.path} is empty but a header was expected')
            header = [name.strip() for name in header]

        self._features = _resolve(schema.feature_columns, header, self.path)
        self._response = _resolve([schema.response_column], header, self.path)[0]
        if header is not None:
            widest = max(self._features + [self._response])
            if widest >= len(header):
                raise SchemaError(f'Column index {widest} is out of range for header of {self.path}')

    def __iter__(self) -> Iterator[Observation]:
        self.skipped = 0
        with self.path.open('r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f, delimiter=self.schema.delimiter)
            if self.schema.header:
                next(reader, None)
            for line_no, row in enumerate(reader, start=2 if self.schema.header else 1):
                if not row:
                    continue
                try:
                    x = np.array([float(row[i]) for i in self._features])
                    obs = Observation(x, float(row[self._response]))
                except (ValueError, IndexError, DomainError) as exc:
                    if self.on_error is RowPolicy.ABORT:
                        raise SchemaError(f'{self.path}:{line_no}: malformed row {row!r} ({exc})') from exc
                    self.skipped += 1
                    log.warning('%s:%d: skipping malformed row (%s)', self.path, line_no, exc)
                    continue
                yield obs


def stream_csv(path: str | Path, schema: CsvSchema, on_error: RowPolicy | str = RowPolicy.ABORT) -> CsvStream:
    """
    Stream observations from a CSV file using bounded memory.

    Returns:
        CsvStream:
            Iterable of observations; its `skipped` attribute counts rows
            dropped under the 'skip' policy.

    Raises:
        FileNotFoundError:
            If `path` does not exist.

        SchemaError:
            On a header/schema mismatch (immediately) or a malformed row under
            the 'abort' policy (while iterating).
    """
    return CsvStream(path, schema, on_error)


class CsvDataset:
    """
    Re-iterable dataset over a CSV file; every pass re-reads the file.
    """

    def __init__(self, path: str | Path, schema: CsvSchema, on_error: RowPolicy | str = RowPolicy.ABORT):
        self.stream = CsvStream(path, schema, on_error)

    @property
    def dimension(self) -> int:
        return self.stream.schema.dimension

    @property
    def skipped(self) -> int:
        return self.stream.skipped

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.stream)

    def chunks(self, size: int = 4096) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        rows: list[np.ndarray] = []
        responses: list[float] = []
        for obs in self.stream:
            rows.append(obs.x)
            responses.append(obs.y)
            if len(rows) == size:
                yield np.vstack(rows), np.array(responses)
                rows, responses = [], []
        if rows:
            yield np.vstack(rows), np.array(responses)

    def __repr__(self) -> str:
        return f'<CsvDataset {self.stream.path}>'


def stream_records(path: str | Path, delimiter: str = ',') -> Iterator[dict[str, str]]:
    """Yield raw header-keyed records, for featurization of mixed-type files."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'No such file: {path}')
    with path.open('r', encoding='utf-8', newline='') as f:
        for record in csv.DictReader(f, delimiter=delimiter):
            yield {key.strip(): (value or '').strip() for key, value in record.items() if key is not None}


def write_observations(path: str | Path, rows: Iterable[tuple[np.ndarray, float]], *, delimiter: str = ',') -> int:
    """
    Write ``(features, response)`` pairs as CSV with header ``f0,...,f{m-1},y``.

    Returns:
        int:
            Number of rows written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, delimiter=delimiter)
        for x, y in rows:
            if count == 0:
                writer.writerow([f'f{i}' for i in range(len(x))] + ['y'])
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])
            count += 1
    return count


__all__ = [
    'CsvDataset',
    'CsvSchema',
    'CsvStream',
    'RowPolicy',
    'stream_csv',
    'stream_records',
    'write_observations',
]
