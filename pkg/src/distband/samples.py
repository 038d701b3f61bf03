"""Two-group sample container, empirical CDFs and the pooled grid."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Input data cannot be turned into two usable groups."""


@dataclass(frozen=True, eq=False)
class StepCdf:
    """Right-continuous empirical CDF stored by its jumps."""

    jump_points: np.ndarray
    cum_counts: np.ndarray
    n: int

    def counts(self, r) -> np.ndarray | int:
        """Number of observations <= r."""
        idx = np.searchsorted(self.jump_points, r, side="right")
        padded = np.concatenate(([0], self.cum_counts))
        out = padded[idx]
        return int(out) if np.ndim(out) == 0 else out

    def __call__(self, r):
        c = self.counts(r)
        return c / self.n


@dataclass(frozen=True)
class TieReport:
    cross_tie_count: int
    within_tie_counts: tuple[int, int]

    @property
    def has_cross_ties(self) -> bool:
        return self.cross_tie_count > 0


@dataclass(frozen=True, eq=False)
class GroupedSamples:
    """Sorted observations of the two groups.

    ``x`` is the group whose label sorts first.
    """

    x: np.ndarray
    y: np.ndarray
    group_labels: tuple[str, str] = ("0", "1")
    n_dropped: int = 0
    n_filtered: int = 0
    _cdfs: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.sort(np.asarray(self.x, dtype=float))
        y = np.sort(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or y.ndim != 1:
            raise DataError("samples must be one-dimensional")
        if x.size == 0 or y.size == 0:
            raise DataError("each group needs at least one observation")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("samples must be finite")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "group_labels", tuple(str(v) for v in self.group_labels))

    @property
    def n_x(self) -> int:
        return int(self.x.size)

    @property
    def n_y(self) -> int:
        return int(self.y.size)

    @property
    def n_total(self) -> int:
        return self.n_x + self.n_y

    @property
    def ecdf_x(self) -> StepCdf:
        if "x" not in self._cdfs:
            self._cdfs["x"] = ecdf(self.x)
        return self._cdfs["x"]

    @property
    def ecdf_y(self) -> StepCdf:
        if "y" not in self._cdfs:
            self._cdfs["y"] = ecdf(self.y)
        return self._cdfs["y"]

    def swapped(self) -> GroupedSamples:
        return GroupedSamples(
            self.y, self.x, self.group_labels[::-1], self.n_dropped, self.n_filtered
        )

    def transformed(self, fn) -> GroupedSamples:
        return GroupedSamples(
            fn(self.x), fn(self.y), self.group_labels, self.n_dropped, self.n_filtered
        )


def _parse_value(v) -> float | None:
    if v is None:
        return None
    if isinstance(v, str):
        v = v.strip()
        if not v or v == ".":
            return None
    try:
        out = float(v)
    except (TypeError, ValueError):
        return None
    return out if math.isfinite(out) else None


def _label_key(labels: list[str]):
    try:
        nums = [float(lab) for lab in labels]
    except ValueError:
        return sorted(labels)
    return [lab for _, lab in sorted(zip(nums, labels))]


def load_grouped(rows: Iterable[tuple[object, object]]) -> GroupedSamples:
    """Split ``(value, group)`` rows into two sorted groups.

    Rows with a missing, non-numeric or non-finite value, or a missing group,
    are dropped and counted. Labels are ordered numerically when both parse as
    numbers and lexicographically otherwise.
    """
    groups: dict[str, list[float]] = {}
    dropped = 0
    for value, label in rows:
        v = _parse_value(value)
        if label is None or (isinstance(label, str) and not label.strip()):
            dropped += 1
            continue
        if isinstance(label, float) and math.isnan(label):
            dropped += 1
            continue
        if v is None:
            dropped += 1
            continue
        groups.setdefault(str(label).strip(), []).append(v)

    if len(groups) != 2:
        raise DataError(
            f"group variable not binary: found {len(groups)} distinct value(s)"
            + (f" {sorted(groups)}" if 0 < len(groups) <= 10 else "")
        )
    first, second = _label_key(list(groups))
    return GroupedSamples(
        np.array(groups[first]), np.array(groups[second]), (first, second), dropped
    )


def ecdf(sorted_values) -> StepCdf:
    values = np.asarray(sorted_values, dtype=float)
    if values.size == 0:
        raise DataError("ecdf of an empty sample")
    if np.any(np.diff(values) < 0):
        raise DataError("ecdf expects sorted input")
    jumps, counts = np.unique(values, return_counts=True)
    return StepCdf(jumps, np.cumsum(counts), int(values.size))


def pooled_grid(g: GroupedSamples) -> np.ndarray:
    """Distinct values of both groups; every rejection decision changes only here."""
    return np.union1d(g.x, g.y)


def count_pairs(g: GroupedSamples, points) -> tuple[np.ndarray, np.ndarray]:
    """(#x <= r, #y <= r) at each r in ``points``."""
    points = np.asarray(points, dtype=float)
    return (
        np.searchsorted(g.x, points, side="right"),
        np.searchsorted(g.y, points, side="right"),
    )


def detect_ties(g: GroupedSamples) -> TieReport:
    ux = np.unique(g.x)
    uy = np.unique(g.y)
    return TieReport(
        cross_tie_count=int(np.intersect1d(ux, uy, assume_unique=True).size),
        within_tie_counts=(int(g.n_x - ux.size), int(g.n_y - uy.size)),
    )
