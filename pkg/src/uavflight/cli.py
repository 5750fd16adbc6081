"""Command-line driver: ``uavflight {plan,sweep,montecarlo,baseline}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from uavflight import fileio
from uavflight.errors import ConditionViolatedError, InfeasibleError, ScenarioError
from uavflight.model import Grid
from uavflight.montecarlo import SOLVERS, sweep_average_time
from uavflight.planner import baseline_always_collecting, baseline_hover_only, dp_solve, dp_solve_pruned
from uavflight.single_sensor import single_sensor_plan

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2

SWEEP_HEADER = ["param", "x", "y", "v", "mode", "total_time"]


def _write_json(doc, out):
    text = fileio.dumps(doc)
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _scenario(args):
    sc = fileio.parse_scenario(args.scenario)
    if getattr(args, "grid", None) is not None:
        sc = replace(sc, solver=replace(sc.solver, grid_points=args.grid))
    return sc


def cmd_plan(args) -> int:
    sc = _scenario(args)
    plan = dp_solve(sc) if args.no_prune else dp_solve_pruned(sc)
    _write_json(fileio.plan_report(plan, sc), args.out)
    return EXIT_OK


def cmd_baseline(args) -> int:
    sc = _scenario(args)
    if args.kind == "hover":
        plan = baseline_hover_only(sc)
    else:
        plan = baseline_always_collecting(sc, Grid.for_scenario(sc))
    _write_json(fileio.plan_report(plan, sc), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    if len(sc.sensors) != 1:
        raise ScenarioError(f"sweep needs exactly one sensor, scenario has {len(sc.sensors)}", path="sensors")
    if args.steps < 1:
        raise ValueError("--steps must be at least 1")
    base = sc.sensors[0]
    rows = []
    for val in np.linspace(args.start, args.stop, args.steps):
        val = float(val)
        sensor = replace(base, bits=val) if args.param == "B" else replace(base, energy=val)
        try:
            point = sc.with_sensors((sensor,))
            seg = single_sensor_plan(point)
        except InfeasibleError:
            rows.append([val, None, None, None, "infeasible", None])
            continue
        rows.append([val, seg.x, seg.y, 0.0 if seg.speed is None else seg.speed, seg.mode,
                     point.cruise_time + seg.cost])
    _write_csv(SWEEP_HEADER, rows, args.out)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg, param, values = fileio.parse_ensemble(args.config)
    curve = sweep_average_time(cfg, param, values, SOLVERS[args.solver], args.workers)
    _write_csv(fileio.CURVE_HEADER, fileio.curve_rows(param, SOLVERS[args.solver], curve), args.out)
    return EXIT_OK


def _write_csv(header, rows, out):
    text = fileio.write_csv(header, rows)
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavflight", description="Minimum-time UAV data-collection planner.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="optimal multi-sensor plan")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--grid", type=int, help="override solver.grid_points")
    sp.add_argument("--no-prune", action="store_true", help="evaluate every state")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("sweep", help="single-sensor sweep over bits or energy")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--param", choices=["B", "E"], required=True)
    sp.add_argument("--from", dest="start", type=float, required=True)
    sp.add_argument("--to", dest="stop", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("montecarlo", help="average flight time over random ensembles")
    sp.add_argument("--config", required=True)
    sp.add_argument("--solver", choices=["dp", "hover", "always"], default="dp")
    sp.add_argument("--workers", type=int, default=None, help="process count (default from UAVFLIGHT_WORKERS)")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_montecarlo)

    sp = sub.add_parser("baseline", help="hover-only or always-collecting plan")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--kind", choices=["hover", "always"], required=True)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_baseline)
    return p


def _error_record(exc: Exception, code: int) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("path", "line", "sensor_index", "threshold"):
        val = getattr(exc, attr, None)
        if val is not None:
            rec[attr] = val
    offenders = getattr(exc, "offenders", None)
    if offenders:
        rec["offenders"] = [{"sensor": int(n), "threshold_bits": float(t)} for n, t in offenders]
    return rec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        return _fail(exc, EXIT_INFEASIBLE)
    except (ScenarioError, ConditionViolatedError, ValueError, OSError) as exc:
        return _fail(exc, EXIT_ERROR)


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps(_error_record(exc, code)) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
