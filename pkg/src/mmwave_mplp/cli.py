"""Command-line experiment runner.

Every subcommand writes one CSV into the output directory. Each file starts
with ``#`` lines echoing the full scenario, the package version and the seed,
which is enough to reproduce it exactly.
"""
from __future__ import annotations

import argparse
import csv
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import analytic as A
from . import montecarlo as M
from . import validation
from .channel import antenna_model
from .geometry import StreetMapError
from .scenario import (Scenario, ScenarioError, Sweep, load_scenario, serialize_scenario)

DEFAULT_ASSOC_LAMBDA_S = (0.001, 0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1)
DEFAULT_SCALING_LAMBDA_B = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2)


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_csv(path: Path, command: str, scenario: Scenario, header, rows, footer=()):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# mmwave_mplp {version_string()}\n")
        fh.write(f"# command: {command}\n")
        fh.write(f"# seed: {scenario.mc.seed}\n")
        for line in serialize_scenario(scenario).splitlines():
            fh.write(f"# scenario: {line}\n")
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        w.writerows(rows)
        for line in footer:
            fh.write(f"# {line}\n")
    return path


def _fmt(x) -> str:
    return repr(float(x))


def cmd_coverage(s: Scenario, workers: int) -> Path:
    cfg = s.network
    antenna = antenna_model(cfg.n_t)
    t_db = s.thresholds.values()
    analytic = [A.coverage(10.0 ** (t / 10.0), cfg, antenna) for t in t_db]
    batch = M.simulate(cfg, antenna, s.mc.n_layouts, s.mc.n_fading, s.mc.seed, workers)
    cols = {f: batch.coverage(f, t_db) for f in M.InterferenceFilter}
    rows = []
    for i, t in enumerate(t_db):
        rows.append([_fmt(t), _fmt(analytic[i])]
                    + [_fmt(cols[f][i].estimate) for f in M.InterferenceFilter]
                    + [_fmt(cols[M.InterferenceFilter.TYPICAL_CROSS][i].half_width_95)])
    header = ["threshold_db", "analytic", "mc_noise_only", "mc_typical", "mc_typical_cross",
              "mc_all", "mc_ci_halfwidth"]
    return write_csv(Path(s.outputs) / "coverage.csv", "coverage", s, header, rows)


def cmd_assoc(s: Scenario, workers: int) -> Path:
    sweep = s.sweep
    if sweep is None:
        sweep = Sweep("lambda_s", DEFAULT_ASSOC_LAMBDA_S)
    elif sweep.parameter != "lambda_s":
        raise ScenarioError("assoc sweeps lambda_s only")
    rows = []
    for v, cfg in sweep.configs(s.network):
        split = M.estimate_association_split(cfg, None, s.mc.n_layouts, s.mc.seed, workers)
        ci = max(r.half_width_95 for r in split)
        rows.append([_fmt(v), _fmt(A.assoc_prob_typical(cfg)), _fmt(A.assoc_prob_typical_approx(cfg))]
                    + [_fmt(r.estimate) for r in split] + [_fmt(ci)])
    header = ["lambda_s", "chi_exact", "chi_approx", "mc_typical", "mc_cross", "mc_parallel", "ci"]
    return write_csv(Path(s.outputs) / "assoc.csv", "assoc", s, header, rows)


def cmd_scaling(s: Scenario, workers: int) -> Path:
    sweep = s.sweep if s.sweep is not None else Sweep("lambda_b", DEFAULT_SCALING_LAMBDA_B)
    if sweep.parameter not in ("lambda_b", "lambda_s"):
        raise ScenarioError("scaling sweeps lambda_b or lambda_s")
    t_db = s.thresholds.values()
    rows, series = [], {t: [] for t in t_db}
    for v, cfg in sweep.configs(s.network):
        for t in t_db:
            T = 10.0 ** (t / 10.0)
            cov = A.coverage(T, cfg)
            series[t].append(cov)
            rows.append([_fmt(v), _fmt(t), _fmt(cov), _fmt(A.coverage_taylor(T, cfg)),
                         _fmt(A.coverage_interference_limited(T, cfg))])
    footer = []
    if sweep.parameter == "lambda_s" and len(sweep.values) >= 2:
        x = np.asarray(sweep.values, dtype=float)
        for t in t_db:
            slope, intercept, r2 = validation._linear_fit(x, np.asarray(series[t]))
            footer.append(f"fit threshold_db={t!r} slope={slope!r} intercept={intercept!r} r2={r2!r}")
    header = [sweep.parameter, "threshold_db", "coverage", "coverage_taylor", "asymptote"]
    return write_csv(Path(s.outputs) / f"scaling_{sweep.parameter}.csv", "scaling", s, header,
                     rows, footer)


def cmd_compare_streets(s: Scenario, workers: int) -> Path:
    res = validation.compare_street_models(n_samples=s.mc.n_layouts, seed=s.mc.seed,
                                           workers=workers, map_path=s.map_path,
                                           noise_n0=s.network.noise_n0)
    cfg = res.pop("config")
    rows = [[name, _fmt(r.estimate), _fmt(r.half_width_95)] for name, r in res.items()]
    footer = [f"fitted lambda_s_h={cfg.lambda_s_h!r} lambda_s_v={cfg.lambda_s_v!r}",
              f"map={s.map_path or validation.BUNDLED_MAP}"]
    return write_csv(Path(s.outputs) / "compare_streets.csv", "compare-streets", s,
                     ["model", "ergodic_rate", "ci"], rows, footer)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="key=value scenario file")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int,
                        help="worker processes (default: $MMWAVE_WORKERS, else all cores)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--lambda-s", type=float, help="street intensity, both orientations")
    common.add_argument("--lambda-b", type=float)
    common.add_argument("--alpha-l", type=float)
    common.add_argument("--alpha-n", type=float)
    common.add_argument("--delta-db", type=float)
    common.add_argument("--nt", type=int)
    common.add_argument("--n0", type=float)
    common.add_argument("--map", help="street-map file for compare-streets")

    p = argparse.ArgumentParser(prog="mmwave-mplp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=version_string())
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("coverage", parents=[common], help="analytic and Monte Carlo coverage curves")
    sub.add_parser("assoc", parents=[common], help="typical-street association vs lambda_s")
    sub.add_parser("scaling", parents=[common], help="coverage vs lambda_b or lambda_s")
    sub.add_parser("compare-streets", parents=[common],
                   help="ergodic rate on MPLP, fixed-grid and map streets")
    v = sub.add_parser("validate", parents=[common], help="run the acceptance suite")
    v.add_argument("--scale", type=float, default=1.0,
                   help="multiply Monte Carlo sample counts (for quick runs)")
    v.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    return p


def scenario_from_args(args) -> Scenario:
    s = load_scenario(args.scenario) if args.scenario else Scenario()
    changes = {k: v for k, v in (("lambda_s", args.lambda_s), ("lambda_b", args.lambda_b),
                                 ("alpha_L", args.alpha_l), ("alpha_N", args.alpha_n),
                                 ("delta_db", args.delta_db), ("n_t", args.nt),
                                 ("noise_n0", args.n0)) if v is not None}
    if changes:
        try:
            s = s.with_network(**changes)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    if args.seed is not None:
        s = replace(s, mc=replace(s.mc, seed=args.seed))
    if args.out:
        s = replace(s, outputs=args.out)
    if args.map:
        s = replace(s, map_path=args.map)
    return s


COMMANDS = {
    "coverage": cmd_coverage,
    "assoc": cmd_assoc,
    "scaling": cmd_scaling,
    "compare-streets": cmd_compare_streets,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        workers = M.resolve_workers(args.workers)
        if args.command == "validate":
            results = validation.run_all(workers=workers, scale=args.scale, only=args.only)
            failed = sum(not r.passed for r in results)
            print(f"{len(results) - failed}/{len(results)} criteria passed")
            return failed
        scenario = scenario_from_args(args)
        path = COMMANDS[args.command](scenario, workers)
    except (ScenarioError, StreetMapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
