"""Monte Carlo checks of error control, power and rank invariance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import SIMLAB_STREAM, substream
from .calibration import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    SUPPORTED_ALPHAS,
    cache_lookup_or_build,
    calibrate_levels,
    global_rejects,
    p_value,
)
from .engine import global_statistic, rejected_ranges, rejects_at
from .ks import ks_p_asymptotic, ks_statistic
from .samples import GroupedSamples, pooled_grid

OUTLIER_BASE = 1e6
INF = math.inf


@dataclass(frozen=True)
class Recipe:
    """Data-generating process for one group.

    kinds: ``uniform`` on (0, 1); ``normal`` N(mu, sigma); ``shifted-above-median``
    N(mu, sigma) with ``shift`` added to draws above mu; ``discrete`` uniform on
    the lattice {0, ..., levels - 1}; ``tail-contamination`` uniform on (0, 1)
    except ``n_tail`` draws at OUTLIER_BASE + U(0, 1).
    """

    kind: str
    n: int
    mu: float = 0.0
    sigma: float = 1.0
    shift: float = 0.0
    levels: int = 5
    n_tail: int = 0

    def __post_init__(self):
        if self.kind not in (
            "uniform", "normal", "shifted-above-median", "discrete", "tail-contamination"
        ):
            raise ValueError(f"unknown recipe kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("recipe needs n >= 1")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(size=self.n)
        if self.kind == "normal":
            return rng.normal(self.mu, self.sigma, size=self.n)
        if self.kind == "shifted-above-median":
            v = rng.normal(self.mu, self.sigma, size=self.n)
            return np.where(v > self.mu, v + self.shift, v)
        if self.kind == "discrete":
            return rng.integers(0, self.levels, size=self.n).astype(float)
        body = rng.uniform(size=self.n - self.n_tail)
        tail = OUTLIER_BASE + rng.uniform(size=self.n_tail)
        return np.concatenate([body, tail])

    def law(self) -> tuple:
        """Everything but the sample size."""
        tail_share = self.n_tail / self.n if self.kind == "tail-contamination" else 0.0
        return (self.kind, self.mu, self.sigma, self.shift, self.levels, tail_share)


def equality_set(rx: Recipe, ry: Recipe) -> tuple[tuple[float, float], ...]:
    """Closed intervals where the two population CDFs agree, known by construction."""
    if rx.law() == ry.law():
        return ((-INF, INF),)
    kinds = {rx.kind, ry.kind}
    if kinds == {"normal"}:
        if rx.mu == ry.mu:
            return ((rx.mu, rx.mu),)
        if rx.sigma == ry.sigma:
            return ()
    if kinds == {"normal", "shifted-above-median"}:
        a, b = (rx, ry) if rx.kind == "normal" else (ry, rx)
        if (a.mu, a.sigma) == (b.mu, b.sigma):
            return ((-INF, a.mu),) if b.shift > 0 else ((-INF, INF),)
    if kinds == {"uniform", "tail-contamination"}:
        return ((-INF, 0.0), (OUTLIER_BASE + 1.0, INF))
    raise ValueError(f"equality set not known for {rx.kind} vs {ry.kind}")


def _points_in(grid: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # decisions are constant on [g_i, g_{i+1}), so an interval is covered by its
    # left end plus the grid points inside it
    inner = grid[(grid > lo) & (grid <= hi)]
    return inner if math.isinf(lo) else np.concatenate(([lo], inner))


def familywise_error(g: GroupedSamples, true_set, alpha_tilde: float) -> bool:
    grid = pooled_grid(g)
    for lo, hi in true_set:
        pts = _points_in(grid, lo, hi)
        if pts.size and rejects_at(g, pts, alpha_tilde).any():
            return True
    return False


@dataclass(frozen=True)
class FwerExperiment:
    name: str
    x: Recipe
    y: Recipe
    trials: int = 2000
    alpha: float = 0.10
    reps: int = DEFAULT_REPS
    seed: int = 1
    calibration_seed: int = DEFAULT_SEED
    true_set: tuple | None = None

    def __post_init__(self):
        if self.trials < 500:
            raise ValueError("an FWER experiment needs at least 500 trials")
        if self.true_set is None:
            object.__setattr__(self, "true_set", equality_set(self.x, self.y))


def _se(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


@dataclass(frozen=True)
class ExperimentOutcome:
    name: str
    trials: int
    alpha: float
    alpha_sim: float
    fwer: float
    power: float
    ks_rate: float
    extra: dict = field(default_factory=dict)

    @property
    def se(self) -> float:
        return _se(self.fwer, self.trials)

    @property
    def power_se(self) -> float:
        return _se(self.power, self.trials)

    @property
    def ks_se(self) -> float:
        return _se(self.ks_rate, self.trials)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "alpha": self.alpha,
            "alpha_sim": self.alpha_sim,
            "fwer": self.fwer,
            "fwer_se": self.se,
            "power": self.power,
            "power_se": self.power_se,
            "ks_rate": self.ks_rate,
            "ks_se": self.ks_se,
        }


def run_fwer_experiment(e: FwerExperiment) -> ExperimentOutcome:
    """Simulate ``e.trials`` datasets and count familywise errors, rejections and KS rejections."""
    record = cache_lookup_or_build(e.x.n, e.y.n, e.alpha, e.reps, e.calibration_seed)
    errors = rejections = ks_rejections = 0
    for t in range(e.trials):
        rng = substream(e.seed, SIMLAB_STREAM, t)
        g = GroupedSamples(e.x.sample(rng), e.y.sample(rng))
        stat = global_statistic(g)
        if global_rejects(stat, record):
            rejections += 1
            if familywise_error(g, e.true_set, record.alpha_tilde):
                errors += 1
        d = ks_statistic(g)[0]
        if ks_p_asymptotic(d, g.n_x, g.n_y) <= e.alpha:
            ks_rejections += 1
    n = e.trials
    return ExperimentOutcome(
        e.name, n, e.alpha, record.alpha_sim, errors / n, rejections / n, ks_rejections / n
    )


def run_power_comparison(
    recipes, trials: int, alpha: float = 0.10, seed: int = 1, reps: int = DEFAULT_REPS
) -> list[ExperimentOutcome]:
    """Any-rejection rate of the band test and of asymptotic KS for each (name, x, y)."""
    recipes = list(recipes)
    if len(recipes) < 2:
        raise ValueError("need at least two recipes")
    out = []
    for name, rx, ry in recipes:
        try:
            true_set = equality_set(rx, ry)
        except ValueError:
            true_set = ()
        out.append(run_fwer_experiment(
            FwerExperiment(name, rx, ry, trials, alpha, reps, seed, true_set=true_set)
        ))
    return out


# ---------------------------------------------------------------- invariance


def _exp(v: np.ndarray, scale: float) -> np.ndarray:
    return np.exp(v / scale)


def make_transform(transform_id: str, g: GroupedSamples):
    """Strictly increasing map for ``transform_id``, scaled to the data so that
    distinct values stay distinct in floating point."""
    pooled = np.concatenate([g.x, g.y])
    if transform_id == "exp":
        scale = max(1.0, float(np.abs(pooled).max()) / 600.0)
        return lambda v: _exp(v, scale)
    if transform_id == "arctan-rescale":
        center = float(np.median(pooled))
        spread = float(np.subtract(*np.percentile(pooled, [75, 25]))) or 1.0
        return lambda v: (np.arctan((v - center) / spread) + np.pi / 2) / np.pi
    if transform_id == "cubic-plus-linear":
        return lambda v: v**3 + v
    raise ValueError(f"unknown transform {transform_id!r}")


TRANSFORMS = ("exp", "arctan-rescale", "cubic-plus-linear")


@dataclass(frozen=True)
class InvarianceResult:
    transform: str
    passed: bool
    mismatches: tuple[str, ...] = ()


def _fingerprint(g: GroupedSamples, reps: int, seed: int) -> dict:
    records = calibrate_levels(g.n_x, g.n_y, reps, seed)
    stat = global_statistic(g)
    out = {
        "t_obs": stat.t_obs,
        "p": p_value(stat, records[0.10]).value,
    }
    for a in SUPPORTED_ALPHAS:
        out[f"reject_{a:.2f}"] = global_rejects(stat, records[a])
        out[f"ranges_{a:.2f}"] = rejected_ranges(g, records[a].alpha_tilde).index_ranges
    return out


def run_invariance_check(
    dataset: GroupedSamples, transform_id: str, seed: int = DEFAULT_SEED, reps: int = DEFAULT_REPS
) -> InvarianceResult:
    fn = make_transform(transform_id, dataset)
    moved = dataset.transformed(fn)
    before = np.concatenate([dataset.x, dataset.y])
    after = np.concatenate([moved.x, moved.y])
    order = np.argsort(before, kind="stable")
    if not (np.all(np.isfinite(after))
            and np.array_equal(np.sign(np.diff(before[order])), np.sign(np.diff(after[order])))):
        raise ValueError(f"{transform_id} is not strictly increasing on this data in floating point")
    a = _fingerprint(dataset, reps, seed)
    b = _fingerprint(moved, reps, seed)
    bad = tuple(k for k in a if a[k] != b[k])
    return InvarianceResult(transform_id, not bad, bad)


# ---------------------------------------------------------------- suites


def intro_fixture() -> GroupedSamples:
    """49 evenly spaced control values and 20 treated values, six of them huge."""
    x = np.arange(1, 50) / 50
    y = np.concatenate([np.arange(1, 15) / 21, OUTLIER_BASE + np.arange(64, 70)])
    return GroupedSamples(x, y, ("0", "1"))


def invariance_datasets(seed: int = 7) -> list[tuple[str, GroupedSamples]]:
    rng = np.random.default_rng(seed)
    return [
        ("intro-fixture", intro_fixture()),
        ("separated", GroupedSamples(np.arange(1.0, 11.0), np.arange(21.0, 31.0))),
        ("normal-equal", GroupedSamples(rng.normal(size=30), rng.normal(size=30))),
        ("normal-scale", GroupedSamples(rng.normal(size=40), rng.normal(0, 3, size=35))),
        ("shifted-above-median",
         GroupedSamples(rng.normal(size=50),
                        Recipe("shifted-above-median", 50, shift=2.0).sample(rng))),
    ]


def suite_experiments(name: str, trials: int, seed: int, reps: int = DEFAULT_REPS):
    if name == "weak":
        return [FwerExperiment("uniform null, n=25+25", Recipe("uniform", 25), Recipe("uniform", 25),
                               trials, 0.10, reps, seed)]
    if name == "strong":
        return [FwerExperiment("N(0,1) vs N(0,3), n=50+50, errors at r=0",
                               Recipe("normal", 50), Recipe("normal", 50, sigma=3.0),
                               trials, 0.10, reps, seed)]
    if name == "ties":
        return [FwerExperiment("5-point lattice, n=25+25", Recipe("discrete", 25),
                               Recipe("discrete", 25), trials, 0.10, reps, seed)]
    raise ValueError(f"unknown suite {name!r}")


def power_recipes():
    return [
        ("tail contamination, 6 of 20 beyond support", Recipe("uniform", 49),
         Recipe("tail-contamination", 20, n_tail=6)),
        ("location shift 1.5 sd, n=30+30", Recipe("normal", 30), Recipe("normal", 30, mu=1.5)),
        ("scale 1 vs 3, n=50+50", Recipe("normal", 50), Recipe("normal", 50, sigma=3.0)),
    ]


SUITES = ("weak", "strong", "ties", "power", "invariance")
