"""Per-stream hypothesis pairs and the panel of K independent streams.

A stream is only ever observed through its log-likelihood-ratio increment
``log f1(x) / f0(x)``; observations themselves are never stored.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .rng import KeyedRng

H0 = 0
H1 = 1


def _check_hypothesis(hypothesis):
    if hypothesis not in (H0, H1):
        raise ValueError(f"hypothesis must be 0 (H0) or 1 (H1), got {hypothesis!r}")
    return bool(hypothesis)


class StreamModel:
    """Common interface of the hypothesis pairs.

    Subclasses provide ``kl_numbers()`` and ``sample_increment()``.  Models
    that the compiled engine understands also expose ``kernel_code`` and
    ``kernel_params``.
    """

    kernel_code: int | None = None

    @property
    def kernel_params(self):
        raise NotImplementedError

    def kl_numbers(self) -> tuple[float, float]:
        raise NotImplementedError

    def sample_increment(self, hypothesis: int, rng: KeyedRng) -> float:
        p0, p1, p2 = self.kernel_params
        signal = _check_hypothesis(hypothesis)
        return float(
            _kernels.increment(self.kernel_code, p0, p1, p2, signal, rng._state, rng._cache)
        )

    def sample_increments(self, hypothesis: int, size: int, rng: KeyedRng) -> np.ndarray:
        """``size`` consecutive increments; same values as repeated
        ``sample_increment`` calls on the same stream."""
        out = np.empty(int(size))
        p0, p1, p2 = self.kernel_params
        signal = _check_hypothesis(hypothesis)
        _kernels.fill_increments(
            self.kernel_code, p0, p1, p2, signal, rng._state, rng._cache, out
        )
        return out

    def increment_variance(self, hypothesis: int) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianMeanShift(StreamModel):
    """N(theta0, sigma^2) against N(theta1, sigma^2)."""

    theta0: float = 0.0
    theta1: float = 0.5
    sigma: float = 1.0

    kernel_code = _kernels.GAUSSIAN

    def __post_init__(self):
        for name in ("theta0", "theta1", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.theta0 == self.theta1:
            raise ValueError("theta0 and theta1 must differ")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def kernel_params(self):
        return (float(self.theta0), float(self.theta1), float(self.sigma))

    def llr(self, x):
        """LLR increment contributed by observation ``x``."""
        return _kernels.gaussian_llr(self.theta0, self.theta1, self.sigma, float(x))

    def kl_numbers(self):
        d = (self.theta1 - self.theta0) ** 2 / (2.0 * self.sigma**2)
        return d, d

    def increment_variance(self, hypothesis):
        _check_hypothesis(hypothesis)
        return ((self.theta1 - self.theta0) / self.sigma) ** 2


@dataclass(frozen=True)
class Bernoulli(StreamModel):
    """Bernoulli(p0) against Bernoulli(p1)."""

    p0: float
    p1: float

    kernel_code = _kernels.BERNOULLI

    def __post_init__(self):
        for name in ("p0", "p1"):
            p = getattr(self, name)
            if not 0.0 < p < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {p}")
        if self.p0 == self.p1:
            raise ValueError("p0 and p1 must differ")

    @property
    def kernel_params(self):
        return (float(self.p0), float(self.p1), 0.0)

    def llr(self, x):
        return _kernels.bernoulli_llr(self.p0, self.p1, bool(x))

    def kl_numbers(self):
        p0, p1 = self.p0, self.p1
        d1 = p1 * math.log(p1 / p0) + (1 - p1) * math.log((1 - p1) / (1 - p0))
        d0 = p0 * math.log(p0 / p1) + (1 - p0) * math.log((1 - p0) / (1 - p1))
        return d0, d1

    def increment_variance(self, hypothesis):
        p = self.p1 if _check_hypothesis(hypothesis) else self.p0
        spread = math.log(self.p1 / self.p0) - math.log((1 - self.p1) / (1 - self.p0))
        return spread**2 * p * (1 - p)


@dataclass(frozen=True, eq=False)
class GenericIncrement(StreamModel):
    """Stream given directly by samplers of its LLR increment.

    ``sampler0(rng)`` and ``sampler1(rng)`` return one increment under H0 and
    H1.  The KL numbers are supplied, not estimated, since the lower bounds
    need them exactly.  Panels of these models run on the pure-Python engine.
    """

    sampler0: Callable[[KeyedRng], float]
    sampler1: Callable[[KeyedRng], float]
    D0: float
    D1: float

    def __post_init__(self):
        for name in ("D0", "D1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def kl_numbers(self):
        return float(self.D0), float(self.D1)

    def sample_increment(self, hypothesis, rng):
        sampler = self.sampler1 if _check_hypothesis(hypothesis) else self.sampler0
        return float(sampler(rng))

    def sample_increments(self, hypothesis, size, rng):
        return np.array([self.sample_increment(hypothesis, rng) for _ in range(int(size))])


def sample_increment(model: StreamModel, hypothesis: int, rng: KeyedRng) -> float:
    return model.sample_increment(hypothesis, rng)


def kl_numbers(model: StreamModel) -> tuple[float, float]:
    return model.kl_numbers()


@dataclass(frozen=True)
class Panel:
    """K mutually independent streams, each with its own hypothesis pair."""

    streams: tuple = field()

    def __init__(self, streams: Iterable[StreamModel]):
        streams = tuple(streams)
        if len(streams) < 2:
            raise ValueError(f"a panel needs at least 2 streams, got {len(streams)}")
        for s in streams:
            if not isinstance(s, StreamModel):
                raise TypeError(f"expected StreamModel, got {type(s).__name__}")
        object.__setattr__(self, "streams", streams)

    @classmethod
    def identical(cls, model: StreamModel, K: int) -> "Panel":
        return cls([model] * int(K))

    @property
    def K(self) -> int:
        return len(self.streams)

    def __len__(self):
        return self.K

    @property
    def exchangeable(self) -> bool:
        """True when every stream carries the same hypothesis pair."""
        first = self.streams[0]
        return all(s is first or s == first for s in self.streams[1:])

    @property
    def compiled(self) -> bool:
        return all(s.kernel_code is not None for s in self.streams)

    def kl_matrix(self) -> np.ndarray:
        """Array of shape (K, 2) holding (D0, D1) per stream."""
        return np.array([s.kl_numbers() for s in self.streams], dtype=float)

    def kernel_arrays(self):
        codes = np.array([s.kernel_code for s in self.streams], dtype=np.int64)
        params = np.array([s.kernel_params for s in self.streams], dtype=float)
        return codes, params


def signal_set(members: Iterable[int], K: int) -> frozenset:
    """Validated signal configuration: a frozenset of 0-based stream ids."""
    A = frozenset(int(k) for k in members)
    bad = [k for k in A if not 0 <= k < K]
    if bad:
        raise ValueError(f"stream ids {sorted(bad)} outside 0..{K - 1}")
    return A


def signal_mask(A: Iterable[int], K: int) -> np.ndarray:
    mask = np.zeros(K, dtype=bool)
    mask[list(signal_set(A, K))] = True
    return mask
