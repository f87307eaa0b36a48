"""Command-line entry point.

Subcommands:

* ``run``      one simulation; writes errors.csv (and plots with --plot),
               prints a run report
* ``compare``  both filter forms across several seeds; prints a summary table
               and fails if any central/decoupled discrepancy exceeds --tol
* ``selftest`` numerical verification suites with per-suite max error

Exit codes: 0 success, 1 equivalence/selftest failure, 2 configuration
error, 3 numerical filter failure. ``GAME_COLOCATE_OUT`` overrides ``--out``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .drivers import CentralDriver, DecoupledDriver
from .errors import ConfigError, NonPositiveDefiniteError, SingularCoreError
from .metrics import RunReport, longrun_average, plot_errors, pose_discrepancy, write_csv
from .selftest import run_all
from .simworld import load_scenario, run_schedule

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="colocate",
        description="Cooperative multi-robot pose localisation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument("--filter", choices=["central", "decoupled", "both"],
                       default="both")
        p.add_argument("--tol", type=float, default=1e-9,
                       help="allowed central/decoupled pose discrepancy")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--duration", type=float, default=None,
                       help="override the scenario duration [s]")

    p_run = sub.add_parser("run", help="run one simulation")
    common(p_run)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--csv", action="store_true",
                       help="write errors.csv (written by default)")
    p_run.add_argument("--plot", action="store_true",
                       help="also write errors.svg and errors.png")

    p_cmp = sub.add_parser("compare", help="run both filters over several seeds")
    common(p_cmp)
    p_cmp.add_argument("--seeds", default="1",
                       help="comma-separated seed list")

    sub.add_parser("selftest", help="run the numerical verification suites")
    return parser


def _make_drivers(which):
    if which == "central":
        return [CentralDriver(backend="hessian", name="central")]
    if which == "decoupled":
        return [DecoupledDriver()]
    # equivalence mode pairs the inverse-form backend with the network
    return [CentralDriver(backend="inverse", name="central"), DecoupledDriver()]


def _out_dir(args):
    out = os.environ.get("GAME_COLOCATE_OUT") or args.out
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _simulate(args, seed=None):
    scenario = load_scenario(args.scenario)
    drivers = _make_drivers(args.filter)
    started = time.monotonic()
    result = run_schedule(scenario, drivers, duration=args.duration, seed=seed,
                          collect_events=False)
    wall = time.monotonic() - started

    primary = drivers[0].name
    rows = result.metrics[primary]
    disc_m = disc_rad = float("nan")
    if len(drivers) == 2:
        disc_m = disc_rad = 0.0
        a, b = (result.pose_rows[d.name] for d in drivers)
        for (_, pa), (_, pb) in zip(a, b):
            m, rad = pose_discrepancy(pa, pb)
            disc_m = max(disc_m, m)
            disc_rad = max(disc_rad, rad)
    report = RunReport(
        scenario=result.scenario.name, seed=result.seed,
        filters="+".join(d.name for d in drivers),
        initial_error_m=rows[0].avg_terr_m, final_error_m=rows[-1].avg_terr_m,
        longrun_error_m=longrun_average(rows),
        max_discrepancy_m=disc_m, max_discrepancy_rad=disc_rad,
        wall_time_s=wall)
    return result, report, rows


def _cmd_run(args):
    result, report, rows = _simulate(args, seed=args.seed)
    out = _out_dir(args)
    csv_path = out / "errors.csv"
    write_csv(rows, csv_path)
    if args.plot:
        plot_errors(csv_path, [out / "errors.svg", out / "errors.png"],
                    title=f"Average translation error ({report.scenario})")
    for line in report.lines():
        print(line)
    print(f"wrote {csv_path}")
    if args.filter == "both" and report.max_discrepancy_m > args.tol:
        print(f"FAIL: pose discrepancy {report.max_discrepancy_m:.3e} m "
              f"exceeds --tol {args.tol:g}")
        return EXIT_FAILED_CHECK
    return EXIT_OK


def _cmd_compare(args):
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --seeds list: {exc}") from exc
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")
    args.filter = "both"

    longruns, discrepancies = [], []
    print(f"{'seed':>6}  {'long-run terr [m]':>18}  {'max discrepancy [m]':>20}")
    for seed in seeds:
        _, report, _ = _simulate(args, seed=seed)
        longruns.append(report.longrun_error_m)
        discrepancies.append(report.max_discrepancy_m)
        print(f"{seed:>6}  {report.longrun_error_m:>18.6f}  "
              f"{report.max_discrepancy_m:>20.3e}")
    print(f"long-run error mean {np.mean(longruns):.6f} m, "
          f"stddev {np.std(longruns):.6f} m")
    print(f"worst discrepancy   {max(discrepancies):.3e} m (tol {args.tol:g})")
    if max(discrepancies) > args.tol:
        print("FAIL: filters disagree beyond tolerance")
        return EXIT_FAILED_CHECK
    return EXIT_OK


def _cmd_selftest(_args):
    results = run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED_CHECK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_selftest(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonPositiveDefiniteError, SingularCoreError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
