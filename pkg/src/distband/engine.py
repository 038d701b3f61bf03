"""Pointwise tests of CDF equality and the global statistic built from them.

At a value r the two bands depend on the data only through the counts
``k_x = #{X_i <= r}`` and ``k_y = #{Y_i <= r}``.  For each count pair we
compute the smallest band level at which the bands separate; a point is
rejected at level ``alpha_tilde`` when that crossing level is at most
``alpha_tilde``.  The global statistic is the minimum crossing level over
the pooled grid.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .samples import GroupedSamples, count_pairs, pooled_grid
from .specfun import reg_inc_beta

NO_CROSSING = 0.5
_BISECT_ITERS = 64
# crossings this close to 0.5 are exact 0.5 up to rounding (e.g. equal sizes
# with k_x = k_y + 1) and count as no crossing
_SNAP = 1e-9
_MANTISSA_BITS = 40


@dataclass(frozen=True)
class CountPair:
    k_x: int
    k_y: int


@dataclass(frozen=True)
class GlobalStat:
    t_obs: float | None
    argmin_point: float | None = None
    argmin_index: int | None = None
    n_x: int | None = None
    n_y: int | None = None

    @property
    def sentinel_value(self) -> float:
        return NO_CROSSING if self.t_obs is None else self.t_obs


@dataclass(frozen=True)
class RejectionRanges:
    """Maximal runs of rejected grid points, as (first value, last value)."""

    ranges: tuple[tuple[float, float], ...] = ()
    index_ranges: tuple[tuple[int, int], ...] = ()

    def __len__(self):
        return len(self.ranges)

    def __iter__(self):
        return iter(self.ranges)

    def __bool__(self):
        return bool(self.ranges)


def _one_sided_threshold(k_lo, n_lo, k_hi, n_hi):
    """Level at which the lower band of one sample rises above the upper band
    of the other.

    The lower envelope at count ``k_lo`` is the a-quantile of
    Beta(k_lo, n_lo + 1 - k_lo); the upper envelope at count ``k_hi`` is the
    (1 - a)-quantile of Beta(k_hi + 1, n_hi - k_hi).  They meet at the x where
    ``I_x(k_lo, n_lo + 1 - k_lo) = 1 - I_x(k_hi + 1, n_hi - k_hi) = a``.  The
    left side increases and the right side decreases in x, so the root is
    found by bisection in x, and ``a`` is read off the left side.

    Lanes with k_lo == 0 or k_hi == n_hi can never cross and get NO_CROSSING.
    """
    k_lo = np.asarray(k_lo, dtype=float)
    k_hi = np.asarray(k_hi, dtype=float)
    out = np.full(k_lo.shape, NO_CROSSING)
    live = (k_lo >= 1) & (k_hi <= n_hi - 1)
    if not live.any():
        return out
    a1, b1 = k_lo[live], n_lo + 1.0 - k_lo[live]
    # 1 - I_x(k_hi + 1, n_hi - k_hi) == I_{1-x}(n_hi - k_hi, k_hi + 1)
    a2, b2 = n_hi - k_hi[live], k_hi[live] + 1.0
    lo = np.zeros(a1.shape)
    hi = np.ones(a1.shape)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        moving = (mid > lo) & (mid < hi)
        if not moving.any():
            break
        h = reg_inc_beta(mid, a1, b1) - reg_inc_beta(1.0 - mid, a2, b2)
        lo = np.where(moving & (h < 0), mid, lo)
        hi = np.where(moving & (h >= 0), mid, hi)
    level = np.asarray(reg_inc_beta(0.5 * (lo + hi), a1, b1))
    level = np.maximum(_canonical(level), np.finfo(float).tiny)
    out[live] = np.where(level < NO_CROSSING - _SNAP, level, NO_CROSSING)
    return out


def _canonical(v: np.ndarray) -> np.ndarray:
    """Round to 40 mantissa bits.

    Count pairs related by symmetry have mathematically equal levels that the
    two computation paths produce with different last bits; rounding makes
    them compare equal, which the calibration tie rule relies on.
    """
    m, e = np.frexp(v)
    return np.ldexp(np.round(m * 2.0**_MANTISSA_BITS) / 2.0**_MANTISSA_BITS, e)


def crossing_levels(k_x, k_y, n_x: int, n_y: int) -> np.ndarray:
    """Vectorised crossing level; NO_CROSSING (0.5) where bands never separate below 0.5."""
    k_x = np.asarray(k_x)
    k_y = np.asarray(k_y)
    return np.minimum(
        _one_sided_threshold(k_x, n_x, k_y, n_y),
        _one_sided_threshold(k_y, n_y, k_x, n_x),
    )


class CrossingTable:
    """Lazily filled (n_x + 1) x (n_y + 1) table of crossing levels.

    Entries are computed in vectorised batches the first time they are asked
    for.  Each entry's value does not depend on the batch it was computed in,
    so results are identical however lookups are ordered or partitioned.
    """

    def __init__(self, n_x: int, n_y: int):
        self.n_x = n_x
        self.n_y = n_y
        self._values = np.full((n_x + 1, n_y + 1), np.nan)
        self._lock = threading.Lock()

    @property
    def filled(self) -> int:
        return int(np.count_nonzero(~np.isnan(self._values)))

    def lookup(self, k_x, k_y) -> np.ndarray:
        k_x = np.asarray(k_x, dtype=np.intp)
        k_y = np.asarray(k_y, dtype=np.intp)
        vals = self._values[k_x, k_y]
        missing = np.isnan(vals)
        if missing.any():
            flat = np.unique(k_x[missing] * (self.n_y + 1) + k_y[missing])
            mx, my = np.divmod(flat, self.n_y + 1)
            new = crossing_levels(mx, my, self.n_x, self.n_y)
            with self._lock:
                self._values[mx, my] = new
            vals = self._values[k_x, k_y]
        return vals

    def full(self) -> np.ndarray:
        kx, ky = np.meshgrid(np.arange(self.n_x + 1), np.arange(self.n_y + 1), indexing="ij")
        return self.lookup(kx, ky)


_tables: dict[tuple[int, int], CrossingTable] = {}
_tables_lock = threading.Lock()


def crossing_table(n_x: int, n_y: int) -> CrossingTable:
    key = (int(n_x), int(n_y))
    with _tables_lock:
        table = _tables.get(key)
        if table is None:
            table = _tables[key] = CrossingTable(*key)
    return table


def crossing_alpha(c: CountPair, n_x: int, n_y: int) -> float | None:
    """Smallest band level at which H_0r is rejected for counts ``c``, or None."""
    if not (0 <= c.k_x <= n_x and 0 <= c.k_y <= n_y):
        raise ValueError(f"counts {c} out of range for sizes ({n_x}, {n_y})")
    level = float(crossing_table(n_x, n_y).lookup(c.k_x, c.k_y))
    return None if level >= NO_CROSSING else level


def grid_levels(g: GroupedSamples) -> tuple[np.ndarray, np.ndarray]:
    """Pooled grid and the crossing level at each grid point."""
    grid = pooled_grid(g)
    kx, ky = count_pairs(g, grid)
    return grid, crossing_table(g.n_x, g.n_y).lookup(kx, ky)


def global_statistic(g: GroupedSamples) -> GlobalStat:
    grid, levels = grid_levels(g)
    i = int(np.argmin(levels))
    if levels[i] >= NO_CROSSING:
        return GlobalStat(None, n_x=g.n_x, n_y=g.n_y)
    return GlobalStat(float(levels[i]), float(grid[i]), i, g.n_x, g.n_y)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks], [idx[-1]]))
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def rejected_ranges(g: GroupedSamples, alpha_tilde: float) -> RejectionRanges:
    if not 0 < alpha_tilde < 0.5:
        raise ValueError(f"alpha_tilde must lie in (0, 0.5), got {alpha_tilde}")
    grid, levels = grid_levels(g)
    runs = _runs(levels <= alpha_tilde)
    return RejectionRanges(
        tuple((float(grid[s]), float(grid[e])) for s, e in runs), tuple(runs)
    )


def rejects_at(g: GroupedSamples, points, alpha_tilde: float) -> np.ndarray:
    """Decision for H_0r at arbitrary values r (not only grid points)."""
    kx, ky = count_pairs(g, points)
    return crossing_table(g.n_x, g.n_y).lookup(kx, ky) <= alpha_tilde


def arrangement_statistics(is_x: np.ndarray, n_x: int, n_y: int) -> np.ndarray:
    """Global statistic for tie-free label arrangements, one row per arrangement.

    ``is_x[b, i]`` says whether the i-th smallest pooled value belongs to the
    first sample.
    """
    is_x = np.atleast_2d(np.asarray(is_x, dtype=bool))
    kx = np.cumsum(is_x, axis=1)
    ky = np.arange(1, is_x.shape[1] + 1) - kx
    return crossing_table(n_x, n_y).lookup(kx, ky).min(axis=1)
