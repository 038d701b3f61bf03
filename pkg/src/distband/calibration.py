"""Calibration of the band level under the null, simulated p-values, caching.

Under a continuous common distribution the labels of the pooled order
statistics form a uniformly random arrangement, and the global statistic
depends on nothing else.  The null distribution is therefore simulated by
shuffling ``n_x`` "X" labels and ``n_y`` "Y" labels.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
import threading
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import CALIBRATION_STREAM, substream
from .engine import NO_CROSSING, GlobalStat, arrangement_statistics

log = logging.getLogger(__name__)

SUPPORTED_ALPHAS = (0.01, 0.05, 0.10)
DEFAULT_REPS = 10_000
DEFAULT_SEED = 20180907
SCHEMA_VERSION = 1
_CHUNK = 1024

# number of null simulations actually executed in this process; tests use it
# to observe cache hits
simulation_runs = 0


@dataclass(frozen=True, eq=False)
class CalibrationRecord:
    n_x: int
    n_y: int
    alpha: float
    reps: int
    seed: int
    alpha_tilde: float
    alpha_sim: float
    null_stats: np.ndarray

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "n_x": self.n_x,
            "n_y": self.n_y,
            "alpha": self.alpha,
            "reps": self.reps,
            "seed": self.seed,
            "alpha_tilde": self.alpha_tilde,
            "alpha_sim": self.alpha_sim,
            "null_stats": [float(v) for v in self.null_stats],
        }

    @classmethod
    def from_json(cls, data: dict) -> CalibrationRecord:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"schema version {data.get('schema_version')!r} != {SCHEMA_VERSION}")
        stats = np.asarray(data["null_stats"], dtype=float)
        if stats.size != data["reps"] or np.any(np.diff(stats) < 0):
            raise ValueError("null_stats inconsistent with record")
        stats.setflags(write=False)
        return cls(
            int(data["n_x"]), int(data["n_y"]), float(data["alpha"]), int(data["reps"]),
            int(data["seed"]), float(data["alpha_tilde"]), float(data["alpha_sim"]), stats,
        )


@dataclass(frozen=True)
class PValue:
    value: float
    is_floor: bool = False


def check_alpha(alpha: float) -> float:
    for a in SUPPORTED_ALPHAS:
        if math.isclose(alpha, a, rel_tol=0, abs_tol=1e-12):
            return a
    levels = ", ".join(f"{a:.2f}" for a in SUPPORTED_ALPHAS)
    raise ValueError(f"alpha must be one of {{{levels}}}, got {alpha}")


def _chunk_stats(n_x: int, n_y: int, seed: int, start: int, stop: int) -> np.ndarray:
    n = n_x + n_y
    is_x = np.empty((stop - start, n), dtype=bool)
    for row, b in enumerate(range(start, stop)):
        is_x[row] = substream(seed, CALIBRATION_STREAM, b).permutation(n) < n_x
    return arrangement_statistics(is_x, n_x, n_y)


def simulate_null_stats(
    n_x: int, n_y: int, reps: int, seed: int = DEFAULT_SEED, workers: int = 1
) -> np.ndarray:
    """Sorted global statistics of ``reps`` random label arrangements.

    Replicate ``b`` draws from its own stream derived from ``(seed, b)``, so the
    result is the same for any ``workers``.  Replicates that never cross hold
    the 0.5 sentinel.
    """
    global simulation_runs
    if n_x < 1 or n_y < 1 or reps < 1:
        raise ValueError("sizes and reps must be positive")
    simulation_runs += 1
    bounds = [(s, min(s + _CHUNK, reps)) for s in range(0, reps, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_stats, *zip(*[(n_x, n_y, seed, s, e) for s, e in bounds])))
    else:
        parts = [_chunk_stats(n_x, n_y, seed, s, e) for s, e in bounds]
    stats = np.sort(np.concatenate(parts))
    stats.setflags(write=False)
    return stats


def select_alpha_tilde(null_stats: np.ndarray, alpha: float) -> tuple[float, float]:
    """Largest null value ``v`` with #{T <= v} <= floor(alpha * B).

    Returns ``(alpha_tilde, alpha_sim)``.  When no null value qualifies the
    level is placed just below the smallest one and ``alpha_sim`` is 0.
    """
    stats = np.sort(np.asarray(null_stats, dtype=float))
    reps = stats.size
    m = int(math.floor(alpha * reps + 1e-9))
    values = np.unique(stats[stats < NO_CROSSING])
    counts = np.searchsorted(stats, values, side="right")
    ok = counts <= m
    if m >= 1 and ok.any():
        alpha_tilde = float(values[ok][-1])
    else:
        alpha_tilde = float(np.nextafter(min(stats[0], NO_CROSSING), 0.0))
    alpha_sim = int(np.searchsorted(stats, alpha_tilde, side="right")) / reps
    return alpha_tilde, alpha_sim


def record_from_stats(
    n_x: int, n_y: int, alpha: float, reps: int, seed: int, null_stats: np.ndarray
) -> CalibrationRecord:
    alpha = check_alpha(alpha)
    alpha_tilde, alpha_sim = select_alpha_tilde(null_stats, alpha)
    return CalibrationRecord(n_x, n_y, alpha, reps, seed, alpha_tilde, alpha_sim, null_stats)


def calibrate(
    n_x: int,
    n_y: int,
    alpha: float,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> CalibrationRecord:
    alpha = check_alpha(alpha)
    if reps * alpha < 1 - 1e-9:
        raise ValueError(f"reps must be at least 1/alpha = {math.ceil(1 / alpha)}")
    stats = simulate_null_stats(n_x, n_y, reps, seed, workers)
    return record_from_stats(n_x, n_y, alpha, reps, seed, stats)


def p_value(stat: GlobalStat | float | None, record: CalibrationRecord) -> PValue:
    """Share of null statistics at or below the observed one, floored at 1/B."""
    if isinstance(stat, GlobalStat):
        if stat.n_x is not None and (stat.n_x, stat.n_y) != (record.n_x, record.n_y):
            raise ValueError(
                f"statistic for sizes ({stat.n_x}, {stat.n_y}) but calibration for "
                f"({record.n_x}, {record.n_y})"
            )
        t = stat.sentinel_value
    else:
        t = NO_CROSSING if stat is None else float(stat)
    count = int(np.searchsorted(record.null_stats, t, side="right"))
    if count == 0:
        return PValue(1.0 / record.reps, True)
    return PValue(count / record.reps, False)


def global_rejects(stat: GlobalStat, record: CalibrationRecord) -> bool:
    return stat.t_obs is not None and stat.t_obs <= record.alpha_tilde


# ---------------------------------------------------------------- caching

_memory: dict[tuple, CalibrationRecord] = {}
_memory_lock = threading.Lock()


def clear_memory_cache() -> None:
    with _memory_lock:
        _memory.clear()


def cache_filename(n_x: int, n_y: int, alpha: float, reps: int, seed: int) -> str:
    return f"calib-v{SCHEMA_VERSION}-nx{n_x}-ny{n_y}-a{alpha:.2f}-B{reps}-s{seed}.json"


def _read_record(path: Path, key: tuple) -> CalibrationRecord | None:
    if not path.exists():
        return None
    try:
        record = CalibrationRecord.from_json(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        warnings.warn(f"ignoring unusable calibration cache file {path}: {exc}", stacklevel=3)
        return None
    if (record.n_x, record.n_y, record.alpha, record.reps, record.seed) != key:
        warnings.warn(f"calibration cache file {path} does not match its key; rebuilding", stacklevel=3)
        return None
    return record


def _write_record(path: Path, record: CalibrationRecord) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name, suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(record.to_json(), fh, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cache_lookup_or_build(
    n_x: int,
    n_y: int,
    alpha: float,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    cache_dir: str | os.PathLike | None = None,
    workers: int = 1,
) -> CalibrationRecord:
    """Return the calibration record for the key, simulating only when needed.

    Records for the other supported levels with the same sizes, reps and seed
    share their null statistics, so asking for all three levels costs one
    simulation.
    """
    alpha = check_alpha(alpha)
    if reps * alpha < 1 - 1e-9:
        raise ValueError(f"reps must be at least 1/alpha = {math.ceil(1 / alpha)}")
    key = (int(n_x), int(n_y), alpha, int(reps), int(seed))
    cache = Path(cache_dir) if cache_dir is not None else None
    with _memory_lock:
        record = _memory.get(key)
    if record is not None:
        if cache is not None and not (cache / cache_filename(*key)).exists():
            _write_record(cache / cache_filename(*key), record)
        return record

    if cache is not None:
        record = _read_record(cache / cache_filename(*key), key)

    if record is None:
        stats = _sibling_stats(key, cache)
        if stats is None:
            log.info("simulating null distribution for n_x=%d n_y=%d, B=%d", n_x, n_y, reps)
            stats = simulate_null_stats(n_x, n_y, reps, seed, workers)
        record = record_from_stats(*key[:2], alpha, *key[3:], stats)
        if cache is not None:
            _write_record(cache / cache_filename(*key), record)

    with _memory_lock:
        _memory[key] = record
    return record


def _sibling_stats(key: tuple, cache: Path | None) -> np.ndarray | None:
    n_x, n_y, alpha, reps, seed = key
    for other in SUPPORTED_ALPHAS:
        if other == alpha:
            continue
        okey = (n_x, n_y, other, reps, seed)
        with _memory_lock:
            rec = _memory.get(okey)
        if rec is None and cache is not None:
            path = cache / cache_filename(*okey)
            if path.exists():
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    rec = _read_record(path, okey)
        if rec is not None:
            return rec.null_stats
    return None


def calibrate_levels(
    n_x: int,
    n_y: int,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    cache_dir: str | os.PathLike | None = None,
    workers: int = 1,
) -> dict[float, CalibrationRecord]:
    """Records for 0.10, 0.05 and 0.01 from one shared simulation."""
    return {
        a: cache_lookup_or_build(n_x, n_y, a, reps, seed, cache_dir, workers)
        for a in sorted(SUPPORTED_ALPHAS, reverse=True)
    }
