"""Random sensor ensembles and average flight-time curves.

Each trial draws its own scenario from a generator keyed by
``(seed, trial)``, so different solvers and different worker counts see
exactly the same scenarios.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate

from uavflight.channel import ChannelParams
from uavflight.errors import InfeasibleError, ScenarioError
from uavflight.model import Grid, Scenario, SensorSpec, SolverSettings
from uavflight.planner import baseline_always_collecting, baseline_hover_only, dp_solve_pruned
from uavflight.single_sensor import LN2

MAX_REJECTIONS = 10_000
WORKERS_ENV = "UAVFLIGHT_WORKERS"

SOLVERS = {
    "dp": "dp",
    "hover": "hover_only",
    "hover_only": "hover_only",
    "always": "always_collecting",
    "always_collecting": "always_collecting",
}


@dataclass(frozen=True)
class EnsembleConfig:
    mean_bits: float
    mean_energy: float
    sensor_count: int = 10
    s_start: float = 0.0
    s_end: float = 10_000.0
    trials: int = 100
    seed: int = 0
    feasibility_margin: float = 0.5
    v_max: float = 26.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not (self.mean_bits > 0 and self.mean_energy > 0):
            raise ValueError("mean bits and mean energy must be positive")
        if self.sensor_count < 0:
            raise ValueError("sensor_count must be non-negative")
        if not self.s_start < self.s_end:
            raise ValueError("s_start must be below s_end")
        if not 0.0 <= self.feasibility_margin < 1.0:
            raise ValueError("feasibility_margin must lie in [0, 1)")

    def with_param(self, param: str, value: float) -> "EnsembleConfig":
        if param == "B":
            return replace(self, mean_bits=value)
        if param == "E":
            return replace(self, mean_energy=value)
        raise ValueError(f"unknown sweep parameter {param!r}; use 'B' or 'E'")


@dataclass(frozen=True)
class CurvePoint:
    value: float
    mean_time: float
    std_time: float
    trials: int
    failures: int = 0
    accepted_mean_bits: float = math.nan
    accepted_mean_energy: float = math.nan

    @property
    def flagged(self) -> bool:
        return self.failures > 0


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def _threshold_slope(ch: ChannelParams) -> float:
    # feasible iff bits < slope * energy
    return ch.W * ch.beta / (2.0 * ch.H**ch.alpha * LN2)


def sample_scenario(config: EnsembleConfig, trial: int = 0) -> Scenario:
    """Draw sorted uniform positions and feasible (bits, energy) pairs.

    Bits and energy are uniform on ``(0, 2 * mean]``; a pair is redrawn until
    it satisfies the feasibility threshold.
    """
    rng = trial_rng(config.seed, trial)
    k = (1.0 - config.feasibility_margin) * _threshold_slope(config.channel)
    pos = np.sort(rng.uniform(config.s_start, config.s_end, config.sensor_count))
    sensors = []
    for p in pos:
        for _ in range(MAX_REJECTIONS):
            b = 2.0 * config.mean_bits * (1.0 - rng.random())
            e = 2.0 * config.mean_energy * (1.0 - rng.random())
            if b < k * e:
                break
        else:
            raise ScenarioError(
                f"no feasible (bits, energy) pair after {MAX_REJECTIONS} draws; "
                f"means B={config.mean_bits:.6g}, E={config.mean_energy:.6g} are too extreme"
            )
        sensors.append(SensorSpec(float(p), float(b), float(e)))
    return Scenario(config.s_start, config.s_end, config.v_max, tuple(sensors), config.channel, config.solver)


def accepted_means(config: EnsembleConfig):
    """Means of bits and energy after rejection, by integrating over the acceptance region."""
    a, b = 2.0 * config.mean_bits, 2.0 * config.mean_energy
    k = (1.0 - config.feasibility_margin) * _threshold_slope(config.channel)
    knee = [a / k] if a / k < b else None

    def quad(f):
        return integrate.quad(f, 0.0, b, points=knee, epsabs=0.0, epsrel=1e-12, limit=200)[0]

    mass = quad(lambda e: min(a, k * e))
    mb = quad(lambda e: 0.5 * min(a, k * e) ** 2) / mass
    me = quad(lambda e: e * min(a, k * e)) / mass
    return mb, me


def solve(scenario: Scenario, solver: str):
    kind = SOLVERS.get(solver)
    if kind is None:
        raise ValueError(f"unknown solver {solver!r}")
    if kind == "dp":
        return dp_solve_pruned(scenario)
    if kind == "hover_only":
        return baseline_hover_only(scenario)
    return baseline_always_collecting(scenario, Grid.for_scenario(scenario))


def _run_one(args):
    config, trial, solvers = args
    scenario = sample_scenario(config, trial)
    out = []
    for name in solvers:
        try:
            out.append(solve(scenario, name).total_time)
        except InfeasibleError:
            out.append(math.nan)
    return out


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_trials(config: EnsembleConfig, solvers=("dp",), workers: Optional[int] = None) -> np.ndarray:
    """Total flight times, shape ``(trials, len(solvers))``; ``nan`` marks a failed trial."""
    workers = default_workers() if workers is None else workers
    jobs = [(config, t, tuple(solvers)) for t in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_run_one(j) for j in jobs]
    return np.array(rows, dtype=float).reshape(config.trials, len(solvers))


def aggregate(value: float, times, config: EnsembleConfig) -> CurvePoint:
    times = np.asarray(times, dtype=float)
    ok = times[~np.isnan(times)]
    mb, me = accepted_means(config)
    std = float(np.std(ok, ddof=1)) if ok.size > 1 else 0.0
    mean = float(np.mean(ok)) if ok.size else math.nan
    return CurvePoint(value, mean, std, int(ok.size), int(times.size - ok.size), mb, me)


def sweep_average_time(config: EnsembleConfig, param: str, values, solver: str = "dp",
                       workers: Optional[int] = None) -> list:
    """Average total flight time for each value of mean bits (``"B"``) or mean energy (``"E"``)."""
    curve = []
    for val in values:
        cfg = config.with_param(param, float(val))
        times = run_trials(cfg, (solver,), workers)[:, 0]
        curve.append(aggregate(float(val), times, cfg))
    return curve


def sweep_all(config: EnsembleConfig, param: str, values, solvers=("dp", "hover_only", "always_collecting"),
              workers: Optional[int] = None):
    """Several solvers on shared draws; returns per-solver curves and the raw trial times."""
    curves = {s: [] for s in solvers}
    raw = []
    for val in values:
        cfg = config.with_param(param, float(val))
        times = run_trials(cfg, solvers, workers)
        raw.append(times)
        for c, s in enumerate(solvers):
            curves[s].append(aggregate(float(val), times[:, c], cfg))
    return curves, np.stack(raw)
