"""Uniform N-level quantizers (wrapping / saturation), additive noise models
and exact channel transition probabilities.

The channel is ``yhat = Q(x + n)`` with unit gain. Output levels are
``Y_i = (i - 1) * p`` for ``i = 1..N``; the wrapping quantizer reduces its
argument modulo ``T = N * p`` first.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfc

_SQRT2 = math.sqrt(2.0)


def norm_cdf(x):
    """Standard normal CDF via erfc (accurate in both tails)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_sf(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def norm_interval(a, b):
    """P(a <= Z < b) for a standard normal Z, without cancellation in the tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    right = norm_sf(a) - norm_sf(b)        # both edges in the right tail
    left = norm_cdf(b) - norm_cdf(a)       # both edges in the left tail
    middle = 1.0 - norm_cdf(a) - norm_sf(b)
    out = np.where(a >= 0, right, np.where(b <= 0, left, middle))
    return np.clip(out, 0.0, 1.0)


class Mode(enum.Enum):
    WRAPPING = "wrapping"
    SATURATION = "saturation"


@dataclass(frozen=True)
class QuantizerSpec:
    levels: int
    resolution: float
    mode: Mode = Mode.WRAPPING

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 2:
            raise ValueError(f"levels must be an integer >= 2, got {self.levels!r}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive, got {self.resolution!r}")
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "levels", int(self.levels))
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def period(self) -> float:
        return self.levels * self.resolution

    @property
    def outputs(self) -> np.ndarray:
        return np.arange(self.levels) * self.resolution

    def quantize(self, v) -> np.ndarray:
        """Map channel outputs to 0-based level indices (cell edges go up)."""
        v = np.asarray(v, dtype=float)
        p, n = self.resolution, self.levels
        if self.mode is Mode.WRAPPING:
            return np.floor(np.mod(v, self.period) / p + 0.5).astype(np.int64) % n
        return np.clip(np.floor(v / p + 0.5), 0, n - 1).astype(np.int64)


@dataclass(frozen=True)
class GaussianNoise:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def variance(self) -> float:
        return self.sigma ** 2

    def cdf(self, t):
        return norm_cdf(np.asarray(t, dtype=float) / self.sigma)

    def pdf(self, t):
        t = np.asarray(t, dtype=float) / self.sigma
        return np.exp(-0.5 * t * t) / (math.sqrt(2 * math.pi) * self.sigma)

    def interval_prob(self, a, b):
        return norm_interval(np.asarray(a, dtype=float) / self.sigma,
                             np.asarray(b, dtype=float) / self.sigma)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.normal(0.0, self.sigma, size)


@dataclass(frozen=True)
class UniformNoise:
    """Noise uniform on ``[-alpha*p/2, alpha*p/2]``; ``p`` is the reference resolution."""

    alpha: float
    resolution_ref: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.resolution_ref > 0):
            raise ValueError("alpha and resolution_ref must be positive")

    @property
    def half_width(self) -> float:
        return 0.5 * self.alpha * self.resolution_ref

    @property
    def variance(self) -> float:
        return (self.alpha * self.resolution_ref) ** 2 / 12.0

    def cdf(self, t):
        a = self.half_width
        return np.clip((np.asarray(t, dtype=float) + a) / (2 * a), 0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        a = self.half_width
        return np.where(np.abs(t) <= a, 1.0 / (2 * a), 0.0)

    def interval_prob(self, a, b):
        return np.maximum(self.cdf(b) - self.cdf(a), 0.0)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        a = self.half_width
        return rng.uniform(-a, a, size)


NoiseModel = GaussianNoise | UniformNoise


@dataclass(frozen=True)
class InputDistribution:
    points: tuple
    probs: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel() + 0.0  # no -0.0
        pr = np.asarray(self.probs, dtype=float).ravel()
        if pts.shape != pr.shape or pts.size == 0:
            raise ValueError("points and probs must be nonempty and of equal length")
        if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError(f"probs must be nonnegative and sum to 1 (sum={pr.sum()!r})")
        object.__setattr__(self, "points", tuple(pts.tolist()))
        object.__setattr__(self, "probs", tuple(pr.tolist()))

    @classmethod
    def for_quantizer(cls, spec: QuantizerSpec, points, probs) -> "InputDistribution":
        """Build a distribution confined to the region the quantizer's mode allows.

        Wrapping inputs are reduced into ``[0, N*p)``; saturation inputs must lie
        in ``[-p/2, (N-1)*p + p/2]``.
        """
        pts = np.asarray(points, dtype=float)
        p = spec.resolution
        if spec.mode is Mode.WRAPPING:
            pts = np.mod(pts, spec.period)
            pts[pts >= spec.period] = 0.0
        else:
            lo, hi = -0.5 * p, (spec.levels - 0.5) * p
            tol = 1e-12 * spec.period
            if np.any(pts < lo - tol) or np.any(pts > hi + tol):
                raise ValueError(f"saturation inputs must lie in [{lo}, {hi}]")
        probs = np.asarray(probs, dtype=float)
        return cls(pts, probs / probs.sum())

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.points)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.probs)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """``rows[j, i] = P(yhat = Y_{i+1} | x = inputs[j])``."""

    inputs: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        inputs = np.asarray(self.inputs, dtype=float).ravel()
        if rows.ndim != 2 or rows.shape[0] != inputs.size:
            raise ValueError("rows must be a |inputs| x N matrix")
        if np.any(rows < 0) or np.any(rows > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(rows.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("rows must sum to 1")
        rows.setflags(write=False)
        inputs.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "inputs", inputs)

    @classmethod
    def from_rows(cls, rows) -> "TransitionMatrix":
        rows = np.asarray(rows, dtype=float)
        return cls(np.arange(rows.shape[0], dtype=float), rows)

    @property
    def shape(self):
        return self.rows.shape


def decision_interval(spec: QuantizerSpec, i: int) -> tuple[float, float]:
    """Decision cell ``[lo, hi)`` of the 1-based output index ``i``.

    For wrapping this is the base cell, understood modulo ``spec.period``.
    Saturation end cells are unbounded (``-inf`` / ``+inf``).
    """
    if not 1 <= i <= spec.levels:
        raise IndexError(f"output index {i} outside 1..{spec.levels}")
    p = spec.resolution
    y = (i - 1) * p
    lo, hi = y - p / 2, y + p / 2
    if spec.mode is Mode.SATURATION:
        if i == 1:
            lo = -math.inf
        if i == spec.levels:
            hi = math.inf
    return lo, hi


def _lattice_terms(spec: QuantizerSpec, noise) -> np.ndarray:
    """Wrap counts k to sum over so the omitted noise mass is < 1e-14."""
    t = spec.period
    if isinstance(noise, GaussianNoise):
        kmax = math.ceil(10 * noise.sigma / t) + 1
    else:
        kmax = math.ceil((noise.half_width + spec.resolution) / t) + 1
    return np.arange(-kmax, kmax + 1)


def _prob_table(spec: QuantizerSpec, noise, x) -> np.ndarray:
    """Vectorised transition probabilities, shape ``x.shape + (N,)``."""
    x = np.asarray(x, dtype=float)
    p, n = spec.resolution, spec.levels
    ys = np.arange(n) * p
    if spec.mode is Mode.WRAPPING:
        xr = np.mod(x, spec.period)[..., None, None]
        k = _lattice_terms(spec, noise)[:, None] * spec.period
        lo = k + ys - p / 2 - xr
        hi = k + ys + p / 2 - xr
        return noise.interval_prob(lo, hi).sum(axis=-2)
    lo = np.concatenate([[-np.inf], ys[1:] - p / 2])
    hi = np.concatenate([ys[:-1] + p / 2, [np.inf]])
    xr = x[..., None]
    return noise.interval_prob(lo - xr, hi - xr)


def transition_prob(spec: QuantizerSpec, noise, x: float, i: int) -> float:
    """``P(yhat = Y_i | x)`` for 1-based ``i``."""
    if not 1 <= i <= spec.levels:
        raise IndexError(f"output index {i} outside 1..{spec.levels}")
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return float(_prob_table(spec, noise, x)[i - 1])


def transition_matrix(spec: QuantizerSpec, noise, inputs: Sequence[float]) -> TransitionMatrix:
    inputs = np.asarray(inputs, dtype=float).ravel()
    if inputs.size == 0:
        raise ValueError("inputs must be nonempty")
    if not np.all(np.isfinite(inputs)):
        raise ValueError("inputs must be finite")
    return TransitionMatrix(inputs, _prob_table(spec, noise, inputs))


def simulate_channel(spec: QuantizerSpec, noise, x, rng: np.random.Generator) -> np.ndarray:
    """Draw one noisy quantized output index (0-based) per entry of ``x``."""
    x = np.asarray(x, dtype=float)
    return spec.quantize(x + noise.sample(rng, x.shape))
