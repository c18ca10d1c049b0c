"""Distribution of the rounding error of an infinite-level uniform quantizer.

The error ``dy = round(y/p)*p - y`` has the Fourier-series density
``1/p + (2/p) sum_k phi_y(2 pi k / p) cos(2 pi k e / p)`` on ``[-p/2, p/2]``
for symmetric ``y``; it tends to uniform as ``p -> 0`` whenever ``phi_y``
decays faster than ``1/u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .quantizer import InputDistribution

SERIES_CUTOFF = 1e-12
MAX_TERMS = 1_000_000


class SeriesNotConvergent(RuntimeError):
    pass


@dataclass(frozen=True)
class CharacteristicFn:
    """Characteristic function of a symmetric real random variable (real, even)."""

    eval: Callable[[np.ndarray], np.ndarray]
    decay_exponent: float | None = None

    def __call__(self, s):
        return self.eval(np.asarray(s, dtype=float))


def gaussian_cf(sigma: float) -> CharacteristicFn:
    return CharacteristicFn(lambda s: np.exp(-0.5 * (sigma * s) ** 2), 2.0)


def uniform_cf(width: float) -> CharacteristicFn:
    """CF of a variable uniform on ``[-width/2, width/2]``; vanishes at ``2 pi k / width``."""
    return CharacteristicFn(lambda s: np.sinc(s * width / (2 * np.pi)), 1.0)


def gaussian_product_cf(x_dist: InputDistribution, sigma_h: float,
                        sigma_n: float) -> CharacteristicFn:
    """CF of ``y = h x + n`` with gaussian gain h and gaussian noise n."""
    if not (sigma_h > 0 and sigma_n > 0):
        raise ValueError("sigma_h and sigma_n must be positive")
    x2 = x_dist.x ** 2
    q = x_dist.q

    def phi(s):
        s2 = np.asarray(s, dtype=float)[..., None] ** 2
        mix = (q * np.exp(-0.5 * sigma_h ** 2 * s2 * x2)).sum(axis=-1)
        return mix * np.exp(-0.5 * sigma_n ** 2 * s2[..., 0])

    return CharacteristicFn(phi, 2.0)


@dataclass(frozen=True)
class ErrorPdf:
    resolution: float
    coefficients: np.ndarray  # phi_y(2 pi k / p), k = 1..K

    def relative_deviation(self, e) -> np.ndarray:
        """``p f(e) - 1``, summed without forming ``p f(e)``."""
        e = np.asarray(e, dtype=float)
        k = np.arange(1, len(self.coefficients) + 1)
        arg = 2 * np.pi * np.multiply.outer(e, k) / self.resolution
        return 2.0 * (self.coefficients * np.cos(arg)).sum(-1)

    def __call__(self, e):
        e = np.asarray(e, dtype=float)
        p = self.resolution
        val = (1.0 + self.relative_deviation(e)) / p
        return np.where(np.abs(e) <= p / 2, val, 0.0)

    def bin_probs(self, edges) -> np.ndarray:
        """Exact integral of the series over consecutive bins."""
        edges = np.clip(np.asarray(edges, dtype=float), -self.resolution / 2,
                        self.resolution / 2)
        p = self.resolution
        k = np.arange(1, len(self.coefficients) + 1)
        prim = edges / p + (self.coefficients / (np.pi * k)
                            * np.sin(2 * np.pi * np.multiply.outer(edges, k) / p)).sum(-1)
        return np.diff(prim)


def error_pdf(phi: CharacteristicFn, p: float, k_series: int = 0) -> ErrorPdf:
    """Series density of the rounding error; ``k_series=0`` picks K automatically."""
    if not p > 0:
        raise ValueError("p must be positive")
    if k_series < 0:
        raise ValueError("k_series must be >= 0")
    if k_series:
        coef = np.real(phi(2 * np.pi * np.arange(1, k_series + 1) / p))
        return ErrorPdf(p, coef)
    chunk, start = 64, 1
    coefs = []
    while start <= MAX_TERMS:
        k = np.arange(start, start + chunk)
        c = np.real(phi(2 * np.pi * k / p))
        # keep terms through the first negligible one, provided the tail stays negligible
        small = np.abs(c) < SERIES_CUTOFF
        if small.any():
            first = int(np.argmax(small))
            tail = np.real(phi(2 * np.pi * np.arange(k[first], k[first] + 4 * chunk) / p))
            if np.all(np.abs(tail) < SERIES_CUTOFF):
                coefs.append(c[:first + 1])
                return ErrorPdf(p, np.concatenate(coefs) if coefs else np.zeros(0))
        coefs.append(c)
        start += chunk
        chunk *= 2
    raise SeriesNotConvergent(f"|phi(2 pi k/p)| still >= {SERIES_CUTOFF} after {MAX_TERMS} terms")


def uniformity_deviation(phi: CharacteristicFn, p: float, k_series: int = 0,
                         grid: int = 2001) -> float:
    """sup over [-p/2, p/2] of |p f(e) - 1|."""
    f = error_pdf(phi, p, k_series)
    e = np.linspace(-p / 2, p / 2, grid)
    return float(np.max(np.abs(f.relative_deviation(e))))


def round_half_away(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.floor(np.abs(t) + 0.5)


def quantization_error(y, p: float) -> np.ndarray:
    return round_half_away(np.asarray(y, dtype=float) / p) * p - y


@dataclass(frozen=True)
class ErrorHistogram:
    edges: np.ndarray
    counts: np.ndarray
    samples: int
    seed: int

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.samples * np.diff(self.edges))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def monte_carlo_error_hist(p: float, sampler, samples: int, bins: int = 100,
                           seed: int = 0, shards: int = 1,
                           chunk: int = 1_000_000) -> ErrorHistogram:
    """Histogram of simulated rounding errors over ``[-p/2, p/2]``.

    ``sampler(rng, n)`` draws n values of y. Each shard uses its own Philox
    stream spawned from ``seed``; counts add, so the merge is order-free.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    edges = np.linspace(-p / 2, p / 2, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    per_shard = np.full(shards, samples // shards)
    per_shard[: samples % shards] += 1
    for child, n in zip(np.random.SeedSequence(seed).spawn(shards), per_shard):
        rng = np.random.Generator(np.random.Philox(child))
        while n > 0:
            m = min(n, chunk)
            err = quantization_error(sampler(rng, m), p)
            counts += np.histogram(np.clip(err, -p / 2, p / 2), edges)[0]
            n -= m
    return ErrorHistogram(edges, counts, samples, seed)


def chi_square_test(hist: ErrorHistogram, pdf: ErrorPdf, level: float = 0.999):
    """Pearson statistic of the histogram against the series; returns (stat, critical, passed)."""
    expected = hist.samples * pdf.bin_probs(hist.edges)
    stat = float((((hist.counts - expected) ** 2) / expected).sum())
    crit = float(stats.chi2.ppf(level, len(expected) - 1))
    return stat, crit, stat <= crit
