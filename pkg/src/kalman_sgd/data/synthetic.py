"""
Synthetic regression data with known parameters.

Features and noise are drawn from two independent generators spawned from
the `SyntheticSpec` seed, so a stream generated in chunks is bit-identical to the same
stream generated at once, and the noise can be re-seeded while the feature
stream stays fixed.

Since:
    v0.1.0
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.special import expit

from kalman_sgd.core import Observation
from kalman_sgd.data.dataset import ArrayDataset
from kalman_sgd.errors import DimensionError, ParameterError, UnsupportedError


CHUNK_SIZE = 4096


class FeatureLaw(str, Enum):
    UNIFORM_CUBE = 'uniform_cube'
    GAUSSIAN = 'gaussian'
    UNIFORM_UNIT = 'uniform_unit'


class NoiseLaw(str, Enum):
    GAUSSIAN = 'gaussian'
    TWO_POINT = 'two_point'


class Response(str, Enum):
    LINEAR = 'linear'
    LOGISTIC = 'logistic'


@dataclass(slots=True, frozen=True, eq=False)
class SyntheticSpec:
    """
    Description of a synthetic data source.

    Parameters:
        n (int):
            Feature dimension.

        beta_star (np.ndarray):
            True parameter, length n.

        sigma2 (float):
            Noise variance, nonnegative. Ignored for logistic responses.

        feature_law (FeatureLaw):
            'uniform_cube' draws from [-bound, bound]^n, 'gaussian' from the
            standard normal, 'uniform_unit' from [0, bound]^n.

        bound (float):
            Half-width of the cube (or width of the unit box).

        condition_profile (Optional[np.ndarray]):
            Per-coordinate feature scales; Q* becomes diagonally rescaled.

        seed (int):
            Seed of the feature and noise generators.

        noise_law (NoiseLaw):
            'gaussian' or 'two_point' (+-sigma with equal probability).

        response (Response):
            'linear' gives y = x^T beta* + noise; 'logistic' draws
            y ~ Bernoulli(sigmoid(x^T beta*)).

        noise_seed (Optional[int]):
            When set, re-seeds the noise generator only; the feature stream
            stays that of `seed`.
    """

    n: int
    beta_star: np.ndarray
    sigma2: float = 1.0
    feature_law: FeatureLaw = FeatureLaw.UNIFORM_CUBE
    bound: float = 1.0
    condition_profile: Optional[np.ndarray] = field(default=None)
    seed: int = 0
    noise_law: NoiseLaw = NoiseLaw.GAUSSIAN
    response: Response = Response.LINEAR
    noise_seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError(f'Synthetic dimension must be positive, got {self.n}')
        beta = np.array(self.beta_star, dtype=float).reshape(-1)
        if beta.shape[0] != self.n:
            raise DimensionError(f'beta_star has length {beta.shape[0]}, expected {self.n}')
        if not self.sigma2 >= 0:
            raise ParameterError(f'sigma2 must be nonnegative, got {self.sigma2!r}')
        if not (np.isfinite(self.bound) and self.bound > 0):
            raise ParameterError(f'Feature bound must be positive and finite, got {self.bound!r}')
        object.__setattr__(self, 'beta_star', beta)
        object.__setattr__(self, 'feature_law', FeatureLaw(self.feature_law))
        object.__setattr__(self, 'noise_law', NoiseLaw(self.noise_law))
        object.__setattr__(self, 'response', Response(self.response))
        if self.condition_profile is not None:
            profile = np.array(self.condition_profile, dtype=float).reshape(-1)
            if profile.shape[0] != self.n or not np.all(profile > 0):
                raise ParameterError('condition_profile must hold n positive scales')
            object.__setattr__(self, 'condition_profile', profile)

    @property
    def scales(self) -> np.ndarray:
        return np.ones(self.n) if self.condition_profile is None else self.condition_profile

    def with_noise_seed(self, noise_seed: Optional[int]) -> SyntheticSpec:
        return replace(self, noise_seed=noise_seed)

    def with_seed(self, seed: int) -> SyntheticSpec:
        return replace(self, seed=seed)


def condition_profile_for(n: int, kappa: float) -> np.ndarray:
    """
    Geometric feature scales whose squares span a ratio of `kappa`.

    The largest scale is 1 and the smallest ``kappa ** -0.5``, so a diagonal
    Q* built from them has condition number `kappa`.
    """
    if n < 1:
        raise DimensionError(f'Dimension must be positive, got {n}')
    if not kappa >= 1:
        raise ParameterError(f'Condition number must be at least 1, got {kappa!r}')
    if n == 1:
        return np.ones(1)
    return kappa ** (-np.arange(n) / (2.0 * (n - 1)))


def _generators(spec: SyntheticSpec) -> tuple[np.random.Generator, np.random.Generator]:
    feature_seq, noise_seq = np.random.SeedSequence(spec.seed).spawn(2)
    if spec.noise_seed is not None:
        noise_seq = np.random.SeedSequence([spec.seed, spec.noise_seed])
    return np.random.default_rng(feature_seq), np.random.default_rng(noise_seq)


def _draw_features(spec: SyntheticSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    if spec.feature_law is FeatureLaw.UNIFORM_CUBE:
        raw = rng.uniform(-spec.bound, spec.bound, size=(m, spec.n))
    elif spec.feature_law is FeatureLaw.UNIFORM_UNIT:
        raw = rng.uniform(0.0, spec.bound, size=(m, spec.n))
    else:
        raw = rng.standard_normal((m, spec.n))
    return raw * spec.scales


def _draw_responses(spec: SyntheticSpec, rng: np.random.Generator, X: np.ndarray) -> np.ndarray:
    signal = X @ spec.beta_star
    if spec.response is Response.LOGISTIC:
        return (rng.uniform(size=X.shape[0]) < expit(signal)).astype(float)
    sigma = np.sqrt(spec.sigma2)
    if spec.noise_law is NoiseLaw.TWO_POINT:
        noise = sigma * (2.0 * rng.integers(0, 2, size=X.shape[0]) - 1.0)
    else:
        noise = sigma * rng.standard_normal(X.shape[0])
    return signal + noise


def generate_blocks(spec: SyntheticSpec, count: int, chunk: int = CHUNK_SIZE) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(X, y)`` blocks of at most `chunk` rows, `count` rows in total."""
    if count < 0:
        raise ParameterError(f'count must be nonnegative, got {count}')
    feature_rng, noise_rng = _generators(spec)
    remaining = count
    while remaining > 0:
        m = min(chunk, remaining)
        X = _draw_features(spec, feature_rng, m)
        yield X, _draw_responses(spec, noise_rng, X)
        remaining -= m


def generate(spec: SyntheticSpec, count: int) -> Iterator[Observation]:
    """
    Stream `count` observations from `spec`.

    Deterministic given `spec`: the same seed yields a bit-identical stream.
    """
    for X, y in generate_blocks(spec, count):
        for row, response in zip(X, y):
            yield Observation(row, response)


def generate_arrays(spec: SyntheticSpec, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Materialize `count` observations as ``(X, y)`` arrays; same values as `generate`."""
    blocks = list(generate_blocks(spec, count))
    if not blocks:
        return np.empty((0, spec.n)), np.empty(0)
    return np.vstack([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])


def generate_dataset(spec: SyntheticSpec, count: int) -> ArrayDataset:
    X, y = generate_arrays(spec, count)
    return ArrayDataset(X, y)


def closed_form_Q(spec: SyntheticSpec) -> np.ndarray:
    """
    Exact second-moment matrix ``E[x x^T]`` of the feature law.

    Raises:
        UnsupportedError:
            For a feature law without a known closed form.
    """
    s = spec.scales
    if spec.feature_law is FeatureLaw.UNIFORM_CUBE:
        return np.diag(s * s) * spec.bound ** 2 / 3.0
    if spec.feature_law is FeatureLaw.GAUSSIAN:
        return np.diag(s * s)
    if spec.feature_law is FeatureLaw.UNIFORM_UNIT:
        return (np.outer(s, s) / 4.0 + np.diag(s * s) / 12.0) * spec.bound ** 2
    raise UnsupportedError(f'No closed-form second moment for feature law {spec.feature_law!r}')


def default_beta_star(n: int) -> np.ndarray:
    """Alternating unit parameter (1, -1, 1, ...), used when none is configured."""
    return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)


def make_spec(
    n:                 int,
    beta_star:         Optional[Sequence[float]] = None,
    **kwargs,
) -> SyntheticSpec:
    """Build a SyntheticSpec, defaulting `beta_star` to `default_beta_star(n)`."""
    beta = default_beta_star(n) if beta_star is None else np.asarray(beta_star, dtype=float)
    return SyntheticSpec(n=n, beta_star=beta, **kwargs)


__all__ = [
    'CHUNK_SIZE',
    'FeatureLaw',
    'NoiseLaw',
    'Response',
    'SyntheticSpec',
    'closed_form_Q',
    'condition_profile_for',
    'default_beta_star',
    'generate',
    'generate_arrays',
    'generate_blocks',
    'generate_dataset',
    'make_spec',
]
