"""Uniform confidence band for one CDF, indexed by ECDF count."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import beta_quantile


@dataclass(frozen=True, eq=False)
class BandSpec:
    """Band envelopes at every count k = n * F_hat(r) in 0..n.

    ``lower_at_count[k]`` is B^a_{k,n} and ``upper_at_count[k]`` is
    B^{1-a}_{k+1,n}, with a = ``alpha_tilde``.
    """

    n: int
    alpha_tilde: float
    lower_at_count: np.ndarray
    upper_at_count: np.ndarray


@lru_cache(maxsize=256)
def _band(n: int, alpha_tilde: float) -> BandSpec:
    counts = np.arange(n + 1)
    lower = np.asarray(beta_quantile(np.full(n + 1, alpha_tilde), counts, n), dtype=float)
    upper = np.asarray(beta_quantile(np.full(n + 1, 1.0 - alpha_tilde), counts + 1, n), dtype=float)
    lower.setflags(write=False)
    upper.setflags(write=False)
    return BandSpec(n, alpha_tilde, lower, upper)


def build_band(n: int, alpha_tilde: float) -> BandSpec:
    if int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n}")
    if not 0 < alpha_tilde < 0.5:
        raise ValueError(f"alpha_tilde must lie in (0, 0.5), got {alpha_tilde}")
    return _band(int(n), float(alpha_tilde))


def band_at(band: BandSpec, k: int) -> tuple[float, float]:
    if not 0 <= k <= band.n:
        raise ValueError(f"count {k} outside 0..{band.n}")
    return float(band.lower_at_count[k]), float(band.upper_at_count[k])


def bands_cross(band_x: BandSpec, band_y: BandSpec, k_x, k_y):
    """True where the two bands fail to overlap at counts (k_x, k_y)."""
    lx, ux = band_x.lower_at_count[k_x], band_x.upper_at_count[k_x]
    ly, uy = band_y.lower_at_count[k_y], band_y.upper_at_count[k_y]
    return (lx > uy) | (ly > ux)
