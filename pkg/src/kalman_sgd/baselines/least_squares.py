"""
Batch least-squares oracle by incremental QR.

Rows are absorbed in blocks: the triangular factor of ``[X y]`` is restacked
with each new block and re-factorized, so memory stays O(n^2) regardless of
the number of rows. Q is never formed; the last column of R holds ``Q^T y``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from kalman_sgd.core import Observation
from kalman_sgd.data.dataset import iter_blocks
from kalman_sgd.errors import DimensionError, DomainError


log = logging.getLogger(__name__)


class IncrementalQR:
    """
    Triangular factor of the augmented matrix ``[X y]``, built block by block.

    Parameters:
        n (int):
            Number of feature columns.
    """

    def __init__(self, n: int):
        if n < 1:
            raise DimensionError(f'Dimension must be positive, got {n}')
        self.n     = n
        self.count = 0
        self._r    = np.empty((0, n + 1))

    def append(self, X: np.ndarray, y: np.ndarray) -> None:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1, 1)
        if X.shape[1] != self.n or X.shape[0] != y.shape[0]:
            raise DimensionError(f'Block of shape {X.shape} with {y.shape[0]} responses does not fit dimension {self.n}')
        if X.shape[0] == 0:
            return
        stacked = np.vstack((self._r, np.hstack((X, y))))
        self._r = np.linalg.qr(stacked, mode='r')
        self.count += X.shape[0]

    @property
    def full_r(self) -> np.ndarray:
        """(n+1) x (n+1) factor, zero-padded while fewer rows have been seen."""
        r = np.zeros((self.n + 1, self.n + 1))
        r[:self._r.shape[0]] = self._r
        return r

    def solve(self, rcond: float | None = None) -> LeastSquaresResult:
        """
        Least-squares solution from the current factor.

        A rank-deficient design yields the minimum-norm solution, flagged.
        """
        if self.count == 0:
            raise DomainError('Least squares needs at least one row')
        full = self.full_r
        R, qty, tail = full[:self.n, :self.n], full[:self.n, self.n], full[self.n, self.n]
        diag = np.abs(np.diag(R))
        rcond = rcond if rcond is not None else self.n * np.finfo(float).eps
        rank = int(np.sum(diag > rcond * max(diag.max(), np.finfo(float).tiny)))

        if rank == self.n:
            beta = scipy.linalg.solve_triangular(R, qty)
            rss = float(tail ** 2)
        else:
            beta, *_ = scipy.linalg.lstsq(R, qty, cond=rcond)
            rss = float(tail ** 2 + np.sum((qty - R @ beta) ** 2))
            log.warning('Least-squares design is rank deficient (rank %d < %d); returning minimum-norm solution',
                        rank, self.n)
        return LeastSquaresResult(beta=beta, rank=rank, rank_deficient=rank < self.n, rss=rss, count=self.count)


@dataclass(slots=True, frozen=True, eq=False)
class LeastSquaresResult:
    beta: np.ndarray
    rank: int
    rank_deficient: bool
    rss: float
    count: int

    @property
    def mrs(self) -> float:
        return self.rss / self.count


def batch_least_squares(data: Iterable[Observation], *, n: int | None = None) -> LeastSquaresResult:
    """
    Minimizer of ``sum (y_i - beta^T x_i)^2`` by row-streaming QR.

    Parameters:
        data (Iterable[Observation]):
            A dataset (anything with ``chunks``) or an iterable of observations.

        n (int | None):
            Dimension; taken from ``data.dimension`` or the first row when omitted.

    Returns:
        LeastSquaresResult:
            Solution, numerical rank, rank-deficiency flag and residual sum
            of squares.
    """
    n = n if n is not None else getattr(data, 'dimension', None)
    qr = IncrementalQR(n) if n is not None else None

    for X, y in iter_blocks(data):
        if qr is None:
            qr = IncrementalQR(X.shape[1])
        qr.append(X, y)

    if qr is None:
        raise DomainError('Least squares needs at least one row')
    return qr.solve()


__all__ = [
    'IncrementalQR',
    'LeastSquaresResult',
    'batch_least_squares',
]
