"""CSV ingestion, the comparison pipeline and its text/JSON/SVG renderings."""

from __future__ import annotations

import csv
import json
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .calibration import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    SUPPORTED_ALPHAS,
    PValue,
    calibrate_levels,
    check_alpha,
    global_rejects,
    p_value,
)
from .engine import GlobalStat, RejectionRanges, global_statistic, rejected_ranges
from .ks import KsResult, ks_test
from .samples import DataError, GroupedSamples, TieReport, detect_ties, load_grouped

_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
}
_FILTER_RE = re.compile(r"^\s*([^=!<>]+?)\s*(==|!=|<=|>=|<|>)\s*(.*?)\s*$")


@dataclass(frozen=True)
class RowFilter:
    column: str
    op: str
    literal: str

    @classmethod
    def parse(cls, text: str) -> RowFilter:
        m = _FILTER_RE.match(text)
        if not m or not m.group(1):
            raise ValueError(
                f"bad filter {text!r}; expected <column><op><value> with op in "
                + ", ".join(_OPS)
            )
        return cls(m.group(1), m.group(2), m.group(3).strip("\"'"))

    def __call__(self, cell: str) -> bool:
        cell = cell.strip()
        try:
            lhs, rhs = float(cell), float(self.literal)
        except ValueError:
            lhs, rhs = cell, self.literal
        return _OPS[self.op](lhs, rhs)

    def __str__(self):
        return f"{self.column}{self.op}{self.literal}"


@dataclass
class RunConfig:
    data: Path
    var: str
    by: str
    alpha: float = 0.10
    pvalue: bool = False
    plot: bool = True
    reps: int = DEFAULT_REPS
    seed: int = DEFAULT_SEED
    cache_dir: Path | None = None
    row_filter: RowFilter | None = None
    json_path: Path | None = None
    svg_path: Path | None = None
    workers: int = 1

    def __post_init__(self):
        self.alpha = check_alpha(self.alpha)
        if self.reps < 100:
            raise ValueError("reps must be at least 100")


@dataclass
class ComparisonReport:
    var: str
    group_var: str
    group_labels: tuple[str, str]
    n: tuple[int, int, int]
    n_dropped: int
    ties: TieReport
    verdicts: dict[float, bool]
    alpha: float
    alpha_tilde: float
    alpha_sim: float
    stat: GlobalStat
    ranges: RejectionRanges
    ks: KsResult
    p: PValue | None = None
    reps: int = DEFAULT_REPS
    seed: int = DEFAULT_SEED
    n_filtered: int = 0
    row_filter: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def tie_warning(self) -> bool:
        return self.ties.has_cross_ties


def read_csv(
    path, value_col: str, group_col: str, row_filter: RowFilter | None = None
) -> GroupedSamples:
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        wanted = [value_col, group_col] + ([row_filter.column] if row_filter else [])
        for col in wanted:
            if col not in header:
                raise DataError(f"column {col!r} not found in {path}")
        rows = []
        filtered = 0
        for rec in reader:
            if row_filter is not None and not row_filter(rec[row_filter.column] or ""):
                filtered += 1
                continue
            rows.append((rec[value_col], rec[group_col]))
    g = load_grouped(rows)
    return GroupedSamples(g.x, g.y, g.group_labels, g.n_dropped, filtered)


def compare(
    g: GroupedSamples,
    alpha: float = 0.10,
    *,
    want_pvalue: bool = False,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    cache_dir=None,
    workers: int = 1,
    var: str = "y",
    group_var: str = "group",
    row_filter: str | None = None,
) -> ComparisonReport:
    alpha = check_alpha(alpha)
    records = calibrate_levels(g.n_x, g.n_y, reps, seed, cache_dir, workers)
    stat = global_statistic(g)
    chosen = records[alpha]
    ranges = rejected_ranges(g, chosen.alpha_tilde)
    return ComparisonReport(
        var=var,
        group_var=group_var,
        group_labels=g.group_labels,
        n=(g.n_total, g.n_x, g.n_y),
        n_dropped=g.n_dropped,
        n_filtered=g.n_filtered,
        ties=detect_ties(g),
        verdicts={a: global_rejects(stat, records[a]) for a in sorted(SUPPORTED_ALPHAS, reverse=True)},
        alpha=alpha,
        alpha_tilde=chosen.alpha_tilde,
        alpha_sim=chosen.alpha_sim,
        stat=stat,
        ranges=ranges,
        ks=ks_test(g, reps if want_pvalue else None, seed),
        p=p_value(stat, chosen) if want_pvalue else None,
        reps=reps,
        seed=seed,
        row_filter=row_filter,
    )


def run_comparison(config: RunConfig) -> tuple[ComparisonReport, GroupedSamples]:
    g = read_csv(config.data, config.var, config.by, config.row_filter)
    report = compare(
        g,
        config.alpha,
        want_pvalue=config.pvalue,
        reps=config.reps,
        seed=config.seed,
        cache_dir=config.cache_dir,
        workers=config.workers,
        var=config.var,
        group_var=config.by,
        row_filter=str(config.row_filter) if config.row_filter else None,
    )
    return report, g


# ---------------------------------------------------------------- text


def fmt(v: float) -> str:
    """Seven significant digits, without the leading zero of |v| < 1."""
    s = f"{v:.7g}"
    if s.startswith("0."):
        return s[1:]
    if s.startswith("-0."):
        return "-" + s[2:]
    return s


def _pct(a: float) -> str:
    return f"{round(a * 100):2d}%"


def render_text(report: ComparisonReport) -> str:
    lab1, lab2 = report.group_labels
    gv = report.group_var
    lines = [
        f"Comparing distribution of {report.var} when {gv}={lab1} vs. {gv}={lab2}",
        f"Number of obs: {report.n[0]} ({report.n[1]} with {gv}={lab1}, "
        f"{report.n[2]} with {gv}={lab2})",
    ]
    if report.n_dropped:
        lines.append(f"({report.n_dropped} observation(s) with missing values dropped)")
    if report.row_filter:
        lines.append(f"(restricted to {report.row_filter}; {report.n_filtered} row(s) excluded)")
    if report.tie_warning:
        lines.append(
            f"Warning: {report.ties.cross_tie_count} value(s) observed in both groups; "
            "with ties the procedure may be conservative."
        )
    lines += [" ", "Global test of equality of two CDFs:"]
    if report.p is not None:
        if report.p.is_floor:
            lines.append(f"    Simulated p-value < {fmt(report.p.value)}")
        else:
            lines.append(f"    Simulated p-value = {fmt(report.p.value)}")
    for a, rej in report.verdicts.items():
        lines.append(f"    At a {_pct(a)} level: {'reject' if rej else 'do not reject'}")
    if report.ranges:
        lines += [
            " ",
            f"With strong control of FWER at a {round(report.alpha * 100)}% level,",
            "CDF equality is rejected at all points in the following",
            f"ranges of {report.var}:",
            "",
            "     from         to ",
        ]
        for lo, hi in report.ranges:
            lines.append(f"{fmt(lo):>9}  {fmt(hi):>9} ")
    lines += [
        " ",
        f"Pointwise level alpha_tilde = {fmt(report.alpha_tilde)}; "
        f"simulated FWER = {fmt(report.alpha_sim)} ({report.reps} replications)",
    ]
    ks = report.ks
    ks_line = f"Kolmogorov-Smirnov: D = {fmt(ks.d)}, asymptotic p-value = {fmt(ks.p_asymptotic)}"
    if ks.p_permutation is not None:
        ks_line += f", permutation p-value = {fmt(ks.p_permutation)}"
    lines.append(ks_line)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- JSON


def report_dict(report: ComparisonReport) -> dict:
    ks = {"d": report.ks.d, "d_plus": report.ks.d_plus, "d_minus": report.ks.d_minus,
          "p_asymptotic": report.ks.p_asymptotic}
    if report.ks.p_permutation is not None:
        ks["p_permutation"] = report.ks.p_permutation
    return {
        "var": report.var,
        "group_var": report.group_var,
        "group_labels": list(report.group_labels),
        "n": list(report.n),
        "n_dropped": report.n_dropped,
        "n_filtered": report.n_filtered,
        "rej_gof10": report.verdicts[0.10],
        "rej_gof05": report.verdicts[0.05],
        "rej_gof01": report.verdicts[0.01],
        "p_gof": None if report.p is None else report.p.value,
        "p_gof_floored": None if report.p is None else report.p.is_floor,
        "alpha": report.alpha,
        "alpha_sim": report.alpha_sim,
        "alpha_tilde": report.alpha_tilde,
        "t_obs": report.stat.t_obs,
        "rej_ranges": [[lo, hi] for lo, hi in report.ranges],
        "ks": ks,
        "tie_warning": report.tie_warning,
        "cross_ties": report.ties.cross_tie_count,
        "reps": report.reps,
        "seed": report.seed,
    }


def render_json(report: ComparisonReport) -> str:
    return json.dumps(report_dict(report), indent=2) + "\n"


# ---------------------------------------------------------------- SVG

_W, _H = 640, 460
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 620, 40, 370
_COLORS = ("#1f4e79", "#c0504d")
_DASHES = ("", ' stroke-dasharray="6 3"')


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    raw = span / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t = first + len(ticks) * step
    return ticks


def _step_points(values: np.ndarray, lo: float, hi: float, sx, sy) -> str:
    jumps, counts = np.unique(values, return_counts=True)
    cum = np.cumsum(counts) / values.size
    pts = [(lo, 0.0)]
    prev = 0.0
    for v, f in zip(jumps, cum):
        pts.append((v, prev))
        pts.append((v, f))
        prev = f
    pts.append((hi, 1.0))
    return " ".join(f"{sx(px):.2f},{sy(py):.2f}" for px, py in pts)


def render_svg(report: ComparisonReport, g: GroupedSamples) -> str:
    pooled = np.concatenate([g.x, g.y])
    dmin, dmax = float(pooled.min()), float(pooled.max())
    if dmax == dmin:
        dmin, dmax = dmin - 1.0, dmax + 1.0
    pad = 0.04 * (dmax - dmin)
    lo, hi = dmin - pad, dmax + pad

    def sx(v):
        return _LEFT + (v - lo) / (hi - lo) * (_RIGHT - _LEFT)

    def sy(p):
        return _BOTTOM - p * (_BOTTOM - _TOP)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="Helvetica, Arial, sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
        f"Empirical CDFs of {escape(report.var)} by {escape(report.group_var)}</text>",
        '<g class="axes" stroke="black" stroke-width="1">',
        f'<line x1="{_LEFT}" y1="{_BOTTOM}" x2="{_RIGHT}" y2="{_BOTTOM}"/>',
        f'<line x1="{_LEFT}" y1="{_BOTTOM}" x2="{_LEFT}" y2="{_TOP}"/>',
        "</g>",
        '<g class="xticks">',
    ]
    for t in _nice_ticks(lo, hi):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{_BOTTOM}" x2="{x:.2f}" y2="{_BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{_BOTTOM + 18}" text-anchor="middle">{t:.6g}</text>')
    out += ["</g>", '<g class="yticks">']
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(p)
        out.append(f'<line x1="{_LEFT - 5}" y1="{y:.2f}" x2="{_LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">{p:g}</text>')
    out += [
        "</g>",
        f'<text x="{(_LEFT + _RIGHT) / 2:.1f}" y="{_BOTTOM + 38}" text-anchor="middle">'
        f"{escape(report.var)}</text>",
        f'<text x="18" y="{(_TOP + _BOTTOM) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(_TOP + _BOTTOM) / 2:.1f})">Cumulative probability</text>',
    ]
    for i, values in enumerate((g.x, g.y)):
        out.append(
            f'<polyline class="ecdf ecdf-{i + 1}" fill="none" stroke="{_COLORS[i]}" '
            f'stroke-width="1.5"{_DASHES[i]} points="{_step_points(values, lo, hi, sx, sy)}"/>'
        )
    y_bar = sy(0.02)
    for a, b in report.ranges:
        out.append(
            f'<line class="rej-range" x1="{sx(a):.2f}" y1="{y_bar:.2f}" x2="{sx(b):.2f}" '
            f'y2="{y_bar:.2f}" stroke="black" stroke-width="5" stroke-linecap="square"/>'
        )
    legend_y = _BOTTOM + 62
    out.append('<g class="legend">')
    for i, lab in enumerate(report.group_labels):
        x = _LEFT + 10 + i * 220
        out.append(
            f'<line x1="{x}" y1="{legend_y}" x2="{x + 30}" y2="{legend_y}" stroke="{_COLORS[i]}" '
            f'stroke-width="1.5"{_DASHES[i]}/>'
        )
        out.append(
            f'<text x="{x + 36}" y="{legend_y + 4}">{escape(report.group_var)}={escape(lab)}</text>'
        )
    if report.ranges:
        x = _LEFT + 10 + 2 * 220
        out.append(
            f'<line x1="{x}" y1="{legend_y}" x2="{x + 30}" y2="{legend_y}" stroke="black" stroke-width="5"/>'
        )
        out.append(f'<text x="{x + 36}" y="{legend_y + 4}">rejected ({round(report.alpha * 100)}% FWER)</text>')
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"
