"""Capacity bounds for infinite-level quantization.

Quantization error z is modelled as uniform with variance ``sigma_z^2``,
independent of the gaussian channel noise n. Then
``C0 <= C <= C0 + D(P_{z+n} || N(0, sigma_z^2 + sigma_n^2))`` with
``C0 = 1/2 log2(1 + Ex sigma_h^2 / (sigma_n^2 + sigma_z^2))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .info import Density, gaussian_density, kl_divergence
from .quantizer import norm_interval

SQRT3 = math.sqrt(3.0)
MAX_GAP_BITS = 0.5 * math.log2(math.pi * math.e / 6)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class IharaConfig:
    ex: float
    sigma_h_sq: float
    sigma_n_sq: float
    sigma_z_sq: float

    def __post_init__(self):
        for name in ("ex", "sigma_h_sq", "sigma_n_sq", "sigma_z_sq"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_db(cls, scnr_db: float, sqnr_db: float, ex: float = 1.0,
                sigma_h_sq: float = 1.0) -> "IharaConfig":
        s = ex * sigma_h_sq
        return cls(ex, sigma_h_sq, s / db_to_linear(scnr_db), s / db_to_linear(sqnr_db))

    @property
    def signal_power(self) -> float:
        return self.ex * self.sigma_h_sq

    @property
    def scnr(self) -> float:
        return self.signal_power / self.sigma_n_sq

    @property
    def sqnr(self) -> float:
        return self.signal_power / self.sigma_z_sq

    @property
    def scnr_db(self) -> float:
        return linear_to_db(self.scnr)

    @property
    def sqnr_db(self) -> float:
        return linear_to_db(self.sqnr)


@dataclass(frozen=True)
class BoundsResult:
    lower_bits: float
    upper_bits: float
    gap_bits: float
    scnr_db: float = math.nan
    sqnr_db: float = math.nan
    unquantized_bits: float = math.nan


def c0(cfg: IharaConfig) -> float:
    return 0.5 * math.log2(1.0 + cfg.signal_power / (cfg.sigma_n_sq + cfg.sigma_z_sq))


def sum_noise_pdf(sigma_z: float, sigma_n: float) -> Density:
    """Density of z + n, z uniform with std sigma_z and n gaussian with std sigma_n."""
    if not (sigma_z > 0 and sigma_n > 0):
        raise ValueError("sigma_z and sigma_n must be positive")
    a = SQRT3 * sigma_z
    scale = 1.0 / (2 * a)

    def pdf(t):
        return scale * norm_interval((t - a) / sigma_n, (t + a) / sigma_n)

    half = a + 8 * sigma_n
    return Density(lambda t: float(pdf(t)) if np.ndim(t) == 0 else pdf(t),
                   -half, half, (-a, a))


def ihara_gap(sigma_z: float, sigma_n: float, tol: float = 1e-8) -> float:
    """KL divergence (bits) of the sum noise from the gaussian of equal variance.

    The divergence is invariant under a joint rescaling of both noises, so the
    integral is evaluated in units of the total standard deviation. This keeps
    the quadrature error a function of sigma_z / sigma_n alone.
    """
    scale = math.hypot(sigma_z, sigma_n)
    if scale == 0.0:
        raise ValueError("at least one noise component must be nonzero")
    z, n = sigma_z / scale, sigma_n / scale
    return max(0.0, kl_divergence(sum_noise_pdf(z, n), gaussian_density(z * z + n * n), tol))


def bounds(cfg: IharaConfig) -> BoundsResult:
    lo = c0(cfg)
    gap = ihara_gap(math.sqrt(cfg.sigma_z_sq), math.sqrt(cfg.sigma_n_sq))
    return BoundsResult(lo, lo + gap, gap, cfg.scnr_db, cfg.sqnr_db,
                        0.5 * math.log2(1 + cfg.scnr))


def bounds_sweep(scnr_db_range, sqnr_db: float, ex: float = 1.0,
                 sigma_h_sq: float = 1.0) -> list[BoundsResult]:
    scnr_db_range = list(scnr_db_range)
    if not scnr_db_range:
        raise ValueError("empty SCNR range")
    return [bounds(IharaConfig.from_db(s, sqnr_db, ex, sigma_h_sq)) for s in scnr_db_range]
