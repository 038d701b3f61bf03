"""Command line entry point: ``distband`` and ``distband simlab``."""

from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
from pathlib import Path

from . import simlab
from .calibration import DEFAULT_REPS, DEFAULT_SEED, SUPPORTED_ALPHAS
from .report import RowFilter, RunConfig, render_json, render_svg, render_text, run_comparison
from .samples import DataError

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="distband",
        description="Compare two distributions point by point with finite-sample "
        "familywise error rate control.",
        epilog="Run 'distband simlab --help' for the simulation suites.",
    )
    p.add_argument("--data", required=True, type=Path, help="CSV file with a header row")
    p.add_argument("--var", required=True, help="column with the outcome values")
    p.add_argument("--by", required=True, help="column with exactly two group values")
    p.add_argument("--alpha", type=float, default=0.10,
                   help="FWER level: 0.10 (default), 0.05 or 0.01")
    p.add_argument("--pvalue", action="store_true", help="also report the simulated GOF p-value")
    p.add_argument("--no-plot", dest="plot", action="store_false", help="do not write the SVG plot")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS, help="null simulation replications")
    seed = p.add_mutually_exclusive_group()
    seed.add_argument("--seed", type=int, default=DEFAULT_SEED, help="simulation seed")
    seed.add_argument("--random-seed", action="store_true", help="draw a fresh seed")
    p.add_argument("--cache-dir", type=Path, help="directory for calibration cache files")
    p.add_argument("--filter", dest="row_filter", metavar="EXPR",
                   help="keep rows where EXPR holds, e.g. married==1")
    p.add_argument("--json", dest="json_path", type=Path, help="write the JSON report here")
    p.add_argument("--svg", dest="svg_path", type=Path,
                   help="SVG output path (default: distband_<var>.svg)")
    p.add_argument("--workers", type=int, default=1, help="processes for the null simulation")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_args(argv) -> RunConfig:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if not any(abs(ns.alpha - a) < 1e-12 for a in SUPPORTED_ALPHAS):
        parser.error(f"--alpha must be one of {{0.01, 0.05, 0.10}}, got {ns.alpha}")
    if ns.reps < 100:
        parser.error("--reps must be at least 100")
    if ns.workers < 1:
        parser.error("--workers must be at least 1")
    row_filter = None
    if ns.row_filter:
        try:
            row_filter = RowFilter.parse(ns.row_filter)
        except ValueError as exc:
            parser.error(str(exc))
    if ns.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    seed = secrets.randbits(63) if ns.random_seed else ns.seed
    svg_path = ns.svg_path
    if ns.plot and svg_path is None:
        svg_path = Path(f"distband_{ns.var}.svg")
    return RunConfig(
        data=ns.data, var=ns.var, by=ns.by, alpha=ns.alpha, pvalue=ns.pvalue, plot=ns.plot,
        reps=ns.reps, seed=seed, cache_dir=ns.cache_dir, row_filter=row_filter,
        json_path=ns.json_path, svg_path=svg_path if ns.plot else None, workers=ns.workers,
    )


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def run(config: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        report, g = run_comparison(config)
        out.write(render_text(report))
        if config.json_path:
            _write(config.json_path, render_json(report))
        if config.plot and config.svg_path:
            _write(config.svg_path, render_svg(report, g))
    except (DataError, ValueError, OSError) as exc:
        print(f"distband: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


# ---------------------------------------------------------------- simlab


def _simlab_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distband simlab", description="Run validation simulations.")
    p.add_argument("--suite", required=True, choices=simlab.SUITES + ("all",))
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--json", dest="json_path", type=Path)
    return p


def _outcome_table(outcomes) -> str:
    head = f"{'experiment':<46} {'FWER':>7} {'(se)':>7} {'reject':>7} {'KS':>7} {'alpha_sim':>9}"
    rows = [head, "-" * len(head)]
    for o in outcomes:
        rows.append(
            f"{o.name:<46} {o.fwer:7.4f} {o.se:7.4f} {o.power:7.4f} {o.ks_rate:7.4f} {o.alpha_sim:9.4f}"
        )
    return "\n".join(rows)


def simlab_main(argv) -> int:
    parser = _simlab_parser()
    ns = parser.parse_args(argv)
    if ns.trials < 500:
        parser.error("--trials must be at least 500")
    suites = simlab.SUITES if ns.suite == "all" else (ns.suite,)
    results: dict[str, list] = {}
    for name in suites:
        if name in ("weak", "strong", "ties"):
            outs = [simlab.run_fwer_experiment(e)
                    for e in simlab.suite_experiments(name, ns.trials, ns.seed, ns.reps)]
            print(f"[{name}]\n{_outcome_table(outs)}\n")
            results[name] = [o.as_dict() for o in outs]
        elif name == "power":
            outs = simlab.run_power_comparison(simlab.power_recipes(), ns.trials, 0.10, ns.seed, ns.reps)
            print(f"[power]\n{_outcome_table(outs)}\n")
            results[name] = [o.as_dict() for o in outs]
        else:
            rows = []
            for label, g in simlab.invariance_datasets():
                for t in simlab.TRANSFORMS:
                    r = simlab.run_invariance_check(g, t, reps=ns.reps)
                    rows.append({"dataset": label, "transform": t, "passed": r.passed,
                                 "mismatches": list(r.mismatches)})
            print("[invariance]")
            for r in rows:
                print(f"{r['dataset']:<24} {r['transform']:<20} {'pass' if r['passed'] else 'FAIL'}")
            print()
            results[name] = rows
    if ns.json_path:
        _write(ns.json_path, json.dumps(results, indent=2) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "simlab":
            return simlab_main(argv[1:])
        config = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
