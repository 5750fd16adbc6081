"""JSON scenario/plan files and CSV curves.

Units are spelled out in every key name (``_m``, ``_mps``, ``_J``, ...).
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from pathlib import Path

from uavflight.channel import ChannelParams, db_to_linear
from uavflight.errors import ScenarioError
from uavflight.model import HOVER, FlightPlan, Scenario, SensorSpec, SolverSettings
from uavflight.montecarlo import EnsembleConfig

FLOAT_FMT = "{:.9g}"


def _line_of(text: str, key: str):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Reader:
    """Typed access into a decoded JSON document with key-path error messages."""

    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source
        try:
            self.doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                                line=exc.lineno) from exc
        if not isinstance(self.doc, dict):
            raise ScenarioError(f"{source}: top level must be an object", line=1)

    def fail(self, path: str, msg: str):
        key = path.rsplit(".", 1)[-1].split("[")[0]
        line = _line_of(self.text, key)
        where = f" (line {line})" if line else ""
        raise ScenarioError(f"{self.source}: {path}{where}: {msg}", path=path, line=line)

    def section(self, obj, key, path, required=True):
        if key not in obj:
            if required:
                self.fail(f"{path}{key}", "missing key")
            return {}
        val = obj[key]
        if not isinstance(val, dict):
            self.fail(f"{path}{key}", "expected an object")
        return val

    def number(self, obj, key, path, default=None, positive=False, integer=False):
        if key not in obj:
            if default is None:
                self.fail(f"{path}{key}", "missing key")
            return default
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            self.fail(f"{path}{key}", f"expected a finite number, got {val!r}")
        if integer and int(val) != val:
            self.fail(f"{path}{key}", f"expected an integer, got {val!r}")
        if positive and not val > 0:
            self.fail(f"{path}{key}", f"must be positive, got {val!r}")
        return int(val) if integer else float(val)


def _channel(r: _Reader) -> ChannelParams:
    c = r.section(r.doc, "channel", "")
    H = r.number(c, "H_m", "channel.", positive=True)
    W = r.number(c, "W_Hz", "channel.", positive=True)
    alpha = r.number(c, "alpha", "channel.", default=2.0)
    if alpha < 2:
        r.fail("channel.alpha", f"must be >= 2, got {alpha}")
    if "beta_linear" in c:
        beta = r.number(c, "beta_linear", "channel.", positive=True)
        if "beta_dB" in c:
            db = r.number(c, "beta_dB", "channel.")
            if abs(db_to_linear(db) - beta) > 1e-9 * beta:
                r.fail("channel.beta_dB", "disagrees with channel.beta_linear")
    else:
        beta = db_to_linear(r.number(c, "beta_dB", "channel."))
    return ChannelParams(H=H, beta=beta, W=W, alpha=alpha)


def _uav(r: _Reader):
    u = r.section(r.doc, "uav", "")
    return (
        r.number(u, "v_max_mps", "uav.", positive=True),
        r.number(u, "s_start_m", "uav."),
        r.number(u, "s_end_m", "uav."),
    )


def _solver(r: _Reader) -> SolverSettings:
    s = r.section(r.doc, "solver", "", required=False)
    d = SolverSettings()
    grid = r.number(s, "grid_points", "solver.", default=d.grid_points, integer=True)
    if grid < 2:
        r.fail("solver.grid_points", "must be at least 2")
    return SolverSettings(
        grid_points=grid,
        speed_tol=r.number(s, "speed_tol_mps", "solver.", default=d.speed_tol, positive=True),
        hover_tol_rel=r.number(s, "hover_tol_rel", "solver.", default=d.hover_tol_rel, positive=True),
    )


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    r = _Reader(text, source)
    ch = _channel(r)
    v_max, s0, s1 = _uav(r)
    raw = r.doc.get("sensors", None)
    if raw is None:
        r.fail("sensors", "missing key")
    if not isinstance(raw, list):
        r.fail("sensors", "expected a list")
    sensors = []
    for n, item in enumerate(raw):
        p = f"sensors[{n}]."
        if not isinstance(item, dict):
            r.fail(f"sensors[{n}]", "expected an object")
        sensors.append(SensorSpec(
            position=r.number(item, "position_m", p),
            bits=r.number(item, "bits", p, positive=True),
            energy=r.number(item, "energy_J", p, positive=True),
        ))
    return Scenario(s0, s1, v_max, tuple(sensors), ch, _solver(r))


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read: {exc.strerror}") from exc
    return parse_scenario_text(text, str(path))


def channel_doc(ch: ChannelParams) -> dict:
    return {"H_m": ch.H, "beta_dB": ch.beta_db, "beta_linear": ch.beta, "W_Hz": ch.W, "alpha": ch.alpha}


def scenario_doc(sc: Scenario) -> dict:
    return {
        "channel": channel_doc(sc.channel),
        "uav": {"v_max_mps": sc.v_max, "s_start_m": sc.s_start, "s_end_m": sc.s_end},
        "sensors": [{"position_m": s.position, "bits": s.bits, "energy_J": s.energy} for s in sc.sensors],
        "solver": {
            "grid_points": sc.solver.grid_points,
            "speed_tol_mps": sc.solver.speed_tol,
            "hover_tol_rel": sc.solver.hover_tol_rel,
        },
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def serialize_scenario(sc: Scenario) -> str:
    return dumps(scenario_doc(sc))


def plan_report(plan: FlightPlan, scenario: Scenario) -> dict:
    segs = []
    for seg in plan.segments:
        segs.append({
            "sensor": seg.sensor_index,
            "mode": seg.mode,
            "x_m": seg.x,
            "y_m": seg.y,
            "speed_mps": 0.0 if seg.mode == HOVER else seg.speed,
            "time_s": seg.time,
            "cost_s": seg.cost,
            "water_level": seg.water_level,
            "hover_power_W": seg.hover_power,
            "constant_power_W": seg.constant_power,
        })
    meta = {
        "method": plan.method,
        "speed_tol_mps": scenario.solver.speed_tol,
        "hover_tol_rel": scenario.solver.hover_tol_rel,
    }
    meta.update(plan.stats)
    return {
        "scenario": scenario_doc(scenario),
        "segments": segs,
        "total_time_s": plan.total_time,
        "solver": meta,
    }


def validate_report(report: dict, scenario: Scenario, rtol: float = 1e-6) -> list:
    """Recompute each segment's time from the scenario; return a list of problems."""
    from uavflight.planner import constant_power_bits
    from uavflight.single_sensor import hover_time, max_throughput, min_speed

    ch = scenario.channel
    problems = []
    for rec in report["segments"]:
        n = rec["sensor"]
        sen = scenario.sensors[n - 1]
        x, y = rec["x_m"], rec["y_m"]
        if rec["mode"] == HOVER:
            expect = hover_time(sen, x, ch, scenario.solver.hover_tol_rel)
        else:
            v = rec["speed_mps"]
            expect = (y - x) / v
            if v > scenario.v_max * (1 + 1e-12):
                problems.append(f"sensor {n}: speed {v} exceeds v_max")
            a, b = x - sen.position, y - sen.position
            if rec.get("constant_power_W") is not None:
                got = float(constant_power_bits(a, b, v, sen.energy, ch))
            else:
                if v < min_speed(a, b, sen, ch, scenario.v_max) * (1 - 1e-9):
                    problems.append(f"sensor {n}: speed {v} below the minimum speed")
                    continue
                got = max_throughput(a, b, v, sen, ch)
            if got < sen.bits * (1 - rtol):
                problems.append(f"sensor {n}: delivers {got:.9g} of {sen.bits:.9g} bits")
        if abs(expect - rec["time_s"]) > rtol * max(abs(expect), 1e-12):
            problems.append(f"sensor {n}: time {rec['time_s']:.9g} s, recomputed {expect:.9g} s")
    return problems


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return FLOAT_FMT.format(v)


def write_csv(header, rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


CURVE_HEADER = ["param", "value", "solver", "mean_time_s", "std_time_s", "trials", "failures",
                "accepted_mean_bits", "accepted_mean_energy_J"]


def curve_rows(param: str, solver: str, curve) -> list:
    return [[param, p.value, solver, p.mean_time, p.std_time, p.trials, p.failures,
             p.accepted_mean_bits, p.accepted_mean_energy] for p in curve]


def parse_ensemble_text(text: str, source: str = "<config>"):
    """Monte-Carlo config: channel/uav/solver sections plus ``ensemble`` and ``sweep``."""
    r = _Reader(text, source)
    ch = _channel(r)
    v_max, s0, s1 = _uav(r)
    e = r.section(r.doc, "ensemble", "")
    cfg = EnsembleConfig(
        mean_bits=r.number(e, "mean_bits", "ensemble.", positive=True),
        mean_energy=r.number(e, "mean_energy_J", "ensemble.", positive=True),
        sensor_count=r.number(e, "sensor_count", "ensemble.", default=10, integer=True),
        s_start=s0,
        s_end=s1,
        trials=r.number(e, "trials", "ensemble.", default=100, integer=True, positive=True),
        seed=r.number(e, "seed", "ensemble.", default=0, integer=True),
        feasibility_margin=r.number(e, "feasibility_margin", "ensemble.", default=0.5),
        v_max=v_max,
        channel=ch,
        solver=_solver(r),
    )
    sw = r.section(r.doc, "sweep", "")
    param = sw.get("param")
    if param not in ("B", "E"):
        r.fail("sweep.param", f"must be 'B' or 'E', got {param!r}")
    values = sw.get("values")
    if not isinstance(values, list) or not values:
        r.fail("sweep.values", "expected a non-empty list of numbers")
    vals = [r.number({"v": v}, "v", f"sweep.values[{i}].", positive=True) for i, v in enumerate(values)]
    return cfg, param, vals


def parse_ensemble(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read: {exc.strerror}") from exc
    return parse_ensemble_text(text, str(path))
