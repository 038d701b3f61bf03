"""Two-sample Kolmogorov-Smirnov baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import KS_STREAM, substream
from .samples import GroupedSamples, count_pairs, pooled_grid

_SERIES_TOL = 1e-12
_CHUNK = 2048


@dataclass(frozen=True)
class KsResult:
    d: float
    d_plus: float
    d_minus: float
    p_asymptotic: float
    p_permutation: float | None = None


def _scaled_gaps(g: GroupedSamples) -> np.ndarray:
    # n_x * n_y * (F_x - F_y) on the grid, in exact integers
    kx, ky = count_pairs(g, pooled_grid(g))
    return kx.astype(np.int64) * g.n_y - ky.astype(np.int64) * g.n_x


def ks_statistic(g: GroupedSamples) -> tuple[float, float, float]:
    """(d, d_plus, d_minus) with d_plus = max(F_x - F_y), d_minus = max(F_y - F_x)."""
    gaps = _scaled_gaps(g)
    scale = g.n_x * g.n_y
    d_plus = max(int(gaps.max()), 0) / scale
    d_minus = max(int(-gaps.min()), 0) / scale
    return max(d_plus, d_minus), d_plus, d_minus


def ks_p_asymptotic(d: float, n_x: int, n_y: int) -> float:
    """Limiting Kolmogorov tail probability at lambda = d * sqrt(n_x n_y / (n_x + n_y))."""
    if not 0 <= d <= 1:
        raise ValueError(f"KS statistic must lie in [0, 1], got {d}")
    lam = d * math.sqrt(n_x * n_y / (n_x + n_y))
    if lam == 0:
        return 1.0
    if lam < 1.0:
        # the alternating series converges slowly here; use the dual theta series
        total = 0.0
        j = 1
        while True:
            term = math.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8 * lam**2))
            total += term
            if term < _SERIES_TOL:
                break
            j += 1
        p = 1.0 - math.sqrt(2 * math.pi) / lam * total
    else:
        p = 0.0
        j = 1
        while True:
            term = math.exp(-2 * j * j * lam * lam)
            p += 2 * (-1) ** (j - 1) * term
            if term < _SERIES_TOL:
                break
            j += 1
    return min(max(p, 0.0), 1.0)


def ks_p_permutation(g: GroupedSamples, reps: int, seed: int) -> float:
    """Share of label shuffles whose KS distance is at least the observed one."""
    if reps < 1:
        raise ValueError("reps must be positive")
    n = g.n_total
    pooled = np.sort(np.concatenate([g.x, g.y]))
    # last index of each block of equal pooled values
    ends = np.flatnonzero(np.r_[pooled[1:] != pooled[:-1], True])
    observed = int(np.abs(_scaled_gaps(g)).max())
    hits = 0
    for start in range(0, reps, _CHUNK):
        stop = min(start + _CHUNK, reps)
        is_x = np.empty((stop - start, n), dtype=bool)
        for row, b in enumerate(range(start, stop)):
            is_x[row] = substream(seed, KS_STREAM, b).permutation(n) < g.n_x
        kx = np.cumsum(is_x, axis=1)[:, ends].astype(np.int64)
        ky = (ends + 1) - kx
        d = np.abs(kx * g.n_y - ky * g.n_x).max(axis=1)
        hits += int(np.count_nonzero(d >= observed))
    return hits / reps


def ks_test(g: GroupedSamples, perm_reps: int | None = None, seed: int = 0) -> KsResult:
    d, d_plus, d_minus = ks_statistic(g)
    p_perm = ks_p_permutation(g, perm_reps, seed) if perm_reps else None
    return KsResult(d, d_plus, d_minus, ks_p_asymptotic(d, g.n_x, g.n_y), p_perm)
