"""Small statistical utilities shared by the simulation studies.

Conventions used throughout the package:

* empirical quantiles interpolate linearly at rank ``h = (n - 1) q + 1``
  on the sorted sample (the same convention NumPy calls ``"linear"``);
* the Kolmogorov-Smirnov statistic is the two-sided sup-distance
  ``D = max_i max(|i/n - F(x_i)|, |F(x_i) - (i-1)/n|)``;
* streaming moments follow Welford/Chan with exact pairwise merging, so a
  partitioned computation reproduces the single-pass result independent of
  the merge order (up to floating-point associativity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, PreconditionError
from .rng import RandomStream


@dataclass
class StreamingMoments:
    """One-pass count/mean/M2 accumulator with pairwise merging."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "StreamingMoments":
        x = np.asarray(samples, dtype=float)
        n = int(x.size)
        if n == 0:
            return cls()
        mean = float(x.mean())
        m2 = float(np.sum((x - mean) ** 2))
        return cls(count=n, mean=mean, m2=m2)

    def push(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "StreamingMoments") -> "StreamingMoments":
        """Exact pairwise combination (Chan-Golub-LeVeque)."""
        if self.count == 0:
            return StreamingMoments(other.count, other.mean, other.m2)
        if other.count == 0:
            return StreamingMoments(self.count, self.mean, self.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return StreamingMoments(n, mean, m2)

    @property
    def variance(self) -> float:
        """Unbiased sample variance M2/(count - 1)."""
        if self.count < 2:
            return float("nan")
        return self.m2 / (self.count - 1)


def ks_statistic(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Two-sided KS distance between a sorted sample and a distribution.

    ``cdf`` must accept an ndarray and be monotone; ``samples`` must already
    be sorted ascending (this is checked and violations raise
    :class:`PreconditionError`).
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 1:
        raise PreconditionError("ks_statistic needs at least one sample")
    if np.any(np.diff(x) < 0):
        raise PreconditionError("ks_statistic requires sorted input")
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus))


def empirical_quantile(samples: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile at rank ``h = (n - 1) q + 1``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise PreconditionError("empirical_quantile needs at least two samples")
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    return float(np.quantile(x, q, method="linear"))


def loglog_slope(points) -> tuple[float, float, float]:
    """Least-squares line through ``(ln x, ln y)``; returns (slope, intercept, r^2)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise PreconditionError("loglog_slope expects an iterable of (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("loglog_slope requires strictly positive coordinates")
    if np.unique(x).size < 2:
        raise PreconditionError("loglog_slope needs at least two distinct x values")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), float(r2)


def bootstrap_se(
    samples: np.ndarray,
    statistic: Callable[[np.ndarray], float],
    n_boot: int,
    stream: RandomStream,
) -> float:
    """Standard deviation of ``statistic`` over ``n_boot`` resamples.

    Deterministic given ``stream``: the resampling indices come from the
    stream's own generator and from nothing else.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 0 or x.shape[0] == 0:
        raise PreconditionError("bootstrap_se needs a non-empty sample")
    if n_boot < 100:
        raise PreconditionError(f"n_boot must be at least 100, got {n_boot}")
    gen = stream.generator()
    n = x.shape[0]
    values = np.empty(n_boot)
    for b in range(n_boot):
        idx = gen.integers(0, n, size=n)
        values[b] = statistic(x[idx])
    return float(np.std(values, ddof=1))
