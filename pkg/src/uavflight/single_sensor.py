"""Single-sensor flight-time problem.

Everything here works in sensor-relative coordinates (offset ``0`` is the
point right above the sensor) unless a function says otherwise.  The grid
routines are vectorised over interval endpoints; the scalar functions are
thin wrappers so both paths share the same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from uavflight.channel import (
    ChannelParams,
    _pathloss,
    inverse_gain,
    pathloss_integral,
    pathloss_integral_array,
)
from uavflight.errors import ConditionViolatedError, InfeasibleError
from uavflight.model import FLY, HOVER, Grid, Interval, PlanSegment, Scenario, SensorSpec

LN2 = math.log(2.0)
# floor for the speed bracket when the minimum speed rounds to zero
_V_FLOOR = 1e-12
_MAX_ITER = 400


@dataclass(frozen=True)
class HoverSolution:
    position: float
    duration: float
    power: float


@dataclass(frozen=True)
class SpeedSolution:
    speed: float
    water_level: float
    throughput: float


@dataclass(frozen=True)
class PowerProfile:
    """Water-filling transmit power over a sensor-relative interval."""

    interval: Interval
    water_level: float
    speed: float
    channel: ChannelParams

    def power(self, s):
        s = np.asarray(s, dtype=float)
        p = np.maximum(0.0, self.water_level - inverse_gain(s, self.channel))
        inside = (s >= self.interval.x) & (s <= self.interval.y)
        p = np.where(inside, p, 0.0)
        return float(p) if p.ndim == 0 else p

    __call__ = power

    def tabulate(self, n: int = 101):
        s = np.linspace(self.interval.x, self.interval.y, n)
        return s, self.power(s)

    def energy(self) -> float:
        """Energy drawn over the interval, ``(1/v) * integral of p``."""
        ch = self.channel
        x, y = self.interval.x, self.interval.y
        return ((y - x) * self.water_level - pathloss_integral(x, y, ch) / ch.beta) / self.speed


# ---------------------------------------------------------------------------
# feasibility and hovering


def feasibility_threshold(sensor: SensorSpec, ch: ChannelParams) -> float:
    """Supremum of deliverable bits: ``W beta E / (2 H^alpha ln 2)``."""
    return ch.W * ch.beta * sensor.energy / (2.0 * ch.H**ch.alpha * LN2)


def feasibility(sensor: SensorSpec, ch: ChannelParams) -> bool:
    if not sensor.energy > 0:
        return False
    return sensor.bits < feasibility_threshold(sensor, ch)


def _hover_bits(T, a, W):
    # (T/2) W log2(1 + a/T), written with log1p for large T
    return 0.5 * W * T * np.log1p(a / T) / LN2


def hover_time_array(offsets, bits: float, energy: float, ch: ChannelParams, rtol: float = 1e-9):
    """Minimum hover durations at sensor-relative ``offsets``; ``inf`` where infeasible."""
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    a = ch.beta * energy / _pathloss(offsets, ch)
    sup = 0.5 * ch.W * a / LN2
    ok = bits < sup
    tol = max(1.0, bits) * rtol

    lo = np.zeros_like(a)
    hi = np.ones_like(a)
    a_ok = np.where(ok, a, 1.0)
    for _ in range(_MAX_ITER):
        short = ok & (_hover_bits(hi, a_ok, ch.W) < bits)
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)

    for _ in range(_MAX_ITER):
        resid = _hover_bits(hi, a_ok, ch.W) - bits
        active = ok & (resid > tol) & (hi - lo > 4.0 * np.spacing(hi))
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        enough = _hover_bits(np.where(mid > 0, mid, hi), a_ok, ch.W) >= bits
        lo = np.where(active & ~enough, mid, lo)
        hi = np.where(active & enough, mid, hi)
    return np.where(ok, hi, np.inf)


def hover_time(sensor: SensorSpec, x: float, ch: ChannelParams, rtol: float = 1e-9) -> float:
    """Hover duration at absolute position ``x`` that delivers exactly ``sensor.bits``.

    Raises
    ------
    InfeasibleError
        If the energy budget cannot deliver the bits from this position.
    """
    off = x - sensor.position
    T = float(hover_time_array(off, sensor.bits, sensor.energy, ch, rtol)[0])
    if not math.isfinite(T):
        sup = 0.5 * ch.W * ch.beta * sensor.energy / (float(_pathloss(off, ch)) * LN2)
        raise InfeasibleError(
            f"cannot deliver {sensor.bits:.6g} bits hovering at offset {off:.6g} m "
            f"(supremum {sup:.6g} bits)",
            threshold=sup,
        )
    return T


def hover_solution(sensor: SensorSpec, x: float, ch: ChannelParams, rtol: float = 1e-9) -> HoverSolution:
    T = hover_time(sensor, x, ch, rtol)
    return HoverSolution(position=x, duration=T, power=sensor.energy / T)


# ---------------------------------------------------------------------------
# flying: minimum speed, water level, throughput


def _check_interval(x, y):
    if not x < y:
        raise ValueError(f"flying interval needs x < y, got [{x}, {y}]")


def _raw_min_speed(x, y, energy, ch, integral=None):
    if integral is None:
        integral = pathloss_integral_array(x, y, ch)
    far = np.maximum(np.square(x), np.square(y))
    edge = (far + ch.H**2) ** (ch.alpha / 2.0)
    return np.maximum(((y - x) * edge - integral) / (ch.beta * energy), 0.0)


def min_speed(x: float, y: float, sensor: SensorSpec, ch: ChannelParams, v_max: float) -> float:
    """Smallest speed keeping the water-filling power positive on ``(x, y)``, capped at ``v_max``."""
    _check_interval(x, y)
    return min(v_max, float(_raw_min_speed(x, y, sensor.energy, ch)))


def min_speed_alpha2(x: float, y: float, sensor: SensorSpec, ch: ChannelParams, v_max: float) -> float:
    """Piecewise minimum-speed expression for free-space pathloss (alpha = 2)."""
    _check_interval(x, y)
    if ch.alpha != 2:
        raise ValueError("piecewise form only holds for alpha == 2")
    bound = 3.0 * ch.beta * sensor.energy * v_max
    if abs(x) <= abs(y):
        num = 2 * y**3 + x**3 - 3 * y**2 * x
    else:
        num = 3 * x**2 * y - 2 * x**3 - y**3
    if num <= bound:
        return num / (3.0 * ch.beta * sensor.energy)
    return v_max


def water_level_array(x, y, v, energy, ch, integral=None):
    if integral is None:
        integral = pathloss_integral_array(x, y, ch)
    width = y - x
    return v * energy / width + integral / (width * ch.beta)


def water_level(x: float, y: float, v: float, sensor: SensorSpec, ch: ChannelParams) -> float:
    _check_interval(x, y)
    if not v > 0:
        raise ValueError("speed must be positive")
    return float(water_level_array(x, y, v, sensor.energy, ch))


def water_level_alpha2(x: float, y: float, v: float, sensor: SensorSpec, ch: ChannelParams) -> float:
    _check_interval(x, y)
    return v * sensor.energy / (y - x) + (x * x + x * y + y * y) / (3 * ch.beta) + ch.H**2 / ch.beta


def _throughput_offset(x, y, ch):
    # v-independent part of the closed-form throughput antiderivative
    def prim(s):
        return (
            s * np.log2(ch.beta / _pathloss(s, ch))
            + ch.alpha * s / LN2
            - ch.alpha * ch.H / LN2 * np.arctan(s / ch.H)
        )

    return prim(y) - prim(x)


class _FlyTerms:
    """Per-interval constants of the throughput closed form, evaluated once."""

    def __init__(self, x, y, energy, ch):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.width = self.y - self.x
        self.energy = energy
        self.ch = ch
        self.integral = pathloss_integral_array(self.x, self.y, ch)
        self.offset = _throughput_offset(self.x, self.y, ch)
        self.vm_raw = _raw_min_speed(self.x, self.y, energy, ch, self.integral)

    def subset(self, idx):
        out = object.__new__(_FlyTerms)
        out.energy, out.ch = self.energy, self.ch
        for name in ("x", "y", "width", "integral", "offset", "vm_raw"):
            setattr(out, name, getattr(self, name)[idx])
        return out

    def level(self, v):
        return water_level_array(self.x, self.y, v, self.energy, self.ch, self.integral)

    def bits(self, v):
        return 0.5 * self.ch.W / v * (self.width * np.log2(self.level(v)) + self.offset)


def max_throughput(x: float, y: float, v: float, sensor: SensorSpec, ch: ChannelParams) -> float:
    """Bits delivered crossing ``[x, y]`` at speed ``v`` with water-filling power.

    Valid only when ``v`` is at least the (uncapped) minimum speed.
    """
    _check_interval(x, y)
    terms = _FlyTerms(x, y, sensor.energy, ch)
    if not v > 0 or v < float(terms.vm_raw) * (1 - 1e-12):
        raise ConditionViolatedError(
            f"speed {v:.6g} m/s is below the minimum {float(terms.vm_raw):.6g} m/s for [{x}, {y}]"
        )
    return float(terms.bits(v))


def power_profile(x: float, y: float, v: float, sensor: SensorSpec, ch: ChannelParams) -> PowerProfile:
    _check_interval(x, y)
    vm = float(_raw_min_speed(x, y, sensor.energy, ch))
    if not v > 0 or v < vm * (1 - 1e-12):
        raise ConditionViolatedError(
            f"speed {v:.6g} m/s is below the minimum {vm:.6g} m/s on [{x}, {y}]; "
            "shrink the interval or raise the speed"
        )
    return PowerProfile(Interval(x, y), water_level(x, y, v, sensor, ch), v, ch)


def solve_speed_array(x, y, bits, energy, ch, v_max, tol=1e-6):
    """Largest feasible speed per interval; ``nan`` where the interval cannot work.

    An interval is rejected if its minimum speed exceeds ``v_max`` or if even
    the minimum speed does not deliver ``bits``.
    """
    terms = _FlyTerms(np.atleast_1d(x), np.atleast_1d(y), energy, ch)
    cond = terms.vm_raw <= v_max
    lo = np.where(cond, np.maximum(terms.vm_raw, _V_FLOOR), v_max)
    hi = np.full_like(lo, float(v_max))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        feasible = cond & (terms.bits(lo) >= bits)
        top = feasible & (terms.bits(hi) >= bits)
        idx = np.flatnonzero(feasible & ~top & (hi - lo > tol))
        sub = terms.subset(idx)
        slo, shi = lo[idx], hi[idx]
        for _ in range(_MAX_ITER):
            if idx.size == 0:
                break
            mid = 0.5 * (slo + shi)
            ok = sub.bits(mid) >= bits
            slo = np.where(ok, mid, slo)
            shi = np.where(ok, shi, mid)
            done = shi - slo <= tol
            if done.any():
                lo[idx[done]] = slo[done]
                keep = ~done
                idx, slo, shi = idx[keep], slo[keep], shi[keep]
                sub = sub.subset(np.flatnonzero(keep))
        lo[idx] = slo
    v = np.where(top, float(v_max), lo)
    return np.where(feasible, v, np.nan), terms


def solve_speed(
    x: float,
    y: float,
    sensor: SensorSpec,
    ch: ChannelParams,
    v_max: float,
    tol: float = 1e-6,
) -> Optional[SpeedSolution]:
    """Fastest speed on sensor-relative ``[x, y]`` that still delivers the data.

    Returns ``None`` when the interval cannot serve the sensor.
    """
    _check_interval(x, y)
    v, terms = solve_speed_array(np.array([x]), np.array([y]), sensor.bits, sensor.energy, ch, v_max, tol)
    v = float(v[0])
    if math.isnan(v):
        return None
    return SpeedSolution(speed=v, water_level=float(terms.level(v)[0]), throughput=float(terms.bits(v)[0]))


# ---------------------------------------------------------------------------
# grid search


@dataclass
class CostMatrix:
    """Stage costs for one sensor over all grid endpoint pairs.

    ``cost[i, j]`` for ``i < j`` is the flying overhead on
    ``[points[i], points[j]]``; the diagonal holds hover durations; the lower
    triangle and infeasible pairs are ``inf``.
    """

    points: np.ndarray
    cost: np.ndarray
    speed: np.ndarray
    hover: np.ndarray


def cost_matrix(sensor: SensorSpec, points, ch: ChannelParams, v_max: float,
                speed_tol: float = 1e-6, hover_tol_rel: float = 1e-9) -> CostMatrix:
    pts = np.asarray(points, dtype=float)
    m = pts.size
    rel = pts - sensor.position
    iu, ju = np.triu_indices(m, k=1)
    v, _ = solve_speed_array(rel[iu], rel[ju], sensor.bits, sensor.energy, ch, v_max, speed_tol)
    width = pts[ju] - pts[iu]
    with np.errstate(invalid="ignore"):
        fly = width * (1.0 / v - 1.0 / v_max)
    fly = np.where(np.isnan(v), np.inf, fly)

    cost = np.full((m, m), np.inf)
    cost[iu, ju] = fly
    speed = np.full((m, m), np.nan)
    speed[iu, ju] = v
    hover = hover_time_array(rel, sensor.bits, sensor.energy, ch, hover_tol_rel)
    cost[np.arange(m), np.arange(m)] = hover
    return CostMatrix(points=pts, cost=cost, speed=speed, hover=hover)


def make_segment(n: int, i: int, j: int, cm: CostMatrix, sensor: SensorSpec, ch: ChannelParams) -> PlanSegment:
    """Build the plan segment for grid action ``(i, j)`` of sensor ``n``."""
    x, y = float(cm.points[i]), float(cm.points[j])
    if i == j:
        T = float(cm.hover[i])
        return PlanSegment(n, HOVER, x, y, time=T, cost=T, hover_power=sensor.energy / T)
    v = float(cm.speed[i, j])
    wl = water_level(x - sensor.position, y - sensor.position, v, sensor, ch)
    return PlanSegment(n, FLY, x, y, time=(y - x) / v, cost=float(cm.cost[i, j]), speed=v, water_level=wl)


def single_sensor_plan(scenario: Scenario, m: Optional[int] = None, grid: Optional[Grid] = None) -> PlanSegment:
    """Best single interval (or hover point) by exhaustive search over grid pairs.

    Ties go to flying over hovering, then to the shorter interval, then to
    the smaller start.
    """
    if len(scenario.sensors) != 1:
        raise ValueError("single_sensor_plan needs exactly one sensor")
    sensor = scenario.sensors[0]
    ch = scenario.channel
    if not feasibility(sensor, ch):
        thr = feasibility_threshold(sensor, ch)
        raise InfeasibleError(
            f"sensor cannot deliver {sensor.bits:.6g} bits (threshold {thr:.6g})",
            sensor_index=1,
            threshold=thr,
        )
    if grid is None:
        grid = Grid.uniform(scenario.s_start, scenario.s_end, m or scenario.solver.grid_points)
    st = scenario.solver
    cm = cost_matrix(sensor, grid.points, ch, scenario.v_max, st.speed_tol, st.hover_tol_rel)

    best = np.min(cm.cost)
    if not math.isfinite(best):
        raise InfeasibleError("no grid interval or hover point serves the sensor", sensor_index=1)
    ii, jj = np.nonzero(cm.cost == best)
    fly = ii < jj
    if fly.any():
        ii, jj = ii[fly], jj[fly]
    widths = cm.points[jj] - cm.points[ii]
    order = np.lexsort((cm.points[ii], widths))
    k = order[0]
    return make_segment(1, int(ii[k]), int(jj[k]), cm, sensor, ch)
