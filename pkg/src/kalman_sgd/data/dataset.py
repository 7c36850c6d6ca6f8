from __future__ import annotations

from typing import Iterable, Iterator, Protocol, runtime_checkable

import numpy as np

from kalman_sgd.core import Observation
from kalman_sgd.errors import DimensionError


@runtime_checkable
class Dataset(Protocol):
    """
    A finite, re-iterable observation source.

    Iterating yields observations in a fixed order; `chunks` yields the same
    rows as ``(X, y)`` blocks for vectorized evaluation.
    """

    @property
    def dimension(self) -> int: ...

    def __iter__(self) -> Iterator[Observation]: ...

    def chunks(self, size: int = 4096) -> Iterator[tuple[np.ndarray, np.ndarray]]: ...


class ArrayDataset:
    """
    In-memory dataset backed by a design matrix and response vector.

    Parameters:
        X (np.ndarray):
            Design matrix, shape (N, n).

        y (np.ndarray):
            Responses, shape (N,).
    """

    def __init__(self, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionError(f'Design matrix {X.shape} does not match {y.shape[0]} responses')
        self.X = X
        self.y = y

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self) -> Iterator[Observation]:
        for row, response in zip(self.X, self.y):
            yield Observation(row, response)

    def chunks(self, size: int = 4096) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for start in range(0, len(self), size):
            yield self.X[start:start + size], self.y[start:start + size]

    def __repr__(self) -> str:
        return f'<ArrayDataset N={len(self)} n={self.dimension}>'


def iter_blocks(data: Iterable[Observation], size: int = 4096) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(X, y)`` blocks from a dataset, or from any iterable of observations."""
    chunks = getattr(data, 'chunks', None)
    if callable(chunks):
        yield from chunks(size)
        return
    rows: list[np.ndarray] = []
    responses: list[float] = []
    for obs in data:
        rows.append(obs.x)
        responses.append(obs.y)
        if len(rows) == size:
            yield np.vstack(rows), np.array(responses)
            rows, responses = [], []
    if rows:
        yield np.vstack(rows), np.array(responses)


def as_arrays(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Materialize any dataset as ``(X, y)``."""
    if isinstance(dataset, ArrayDataset):
        return dataset.X, dataset.y
    blocks = list(dataset.chunks())
    if not blocks:
        return np.empty((0, dataset.dimension)), np.empty(0)
    return np.vstack([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])


__all__ = [
    'ArrayDataset',
    'Dataset',
    'as_arrays',
    'iter_blocks',
]
