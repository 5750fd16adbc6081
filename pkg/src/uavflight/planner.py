"""Multi-sensor flight-time minimisation by dynamic programming over a grid.

Stage ``n`` serves sensor ``n``.  The state is where the previous sensor's
interval ended; the action is the interval ``(x, y)`` with ``state <= x <= y``.
The terminal cost is the time to cross the whole route at ``v_max``, and
each stage adds the overhead of its interval relative to ``v_max``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from uavflight.channel import ChannelParams, _pathloss
from uavflight.errors import InfeasibleError
from uavflight.model import FLY, HOVER, FlightPlan, Grid, PlanSegment, Scenario, SensorSpec
from uavflight.single_sensor import (
    LN2,
    CostMatrix,
    cost_matrix,
    hover_time_array,
    make_segment,
    solve_speed_array,
)

__all__ = [
    "CostToGoTable",
    "baseline_always_collecting",
    "baseline_hover_only",
    "constant_power_bits",
    "constant_power_speed",
    "cost_matrices",
    "dp_solve",
    "dp_solve_pruned",
    "stage_cost",
]


@functools.lru_cache(maxsize=65536)
def stage_cost(n: int, x: float, y: float, scenario: Scenario) -> float:
    """Overhead in seconds of serving sensor ``n`` (1-based) on ``[x, y]``.

    Hovering (``x == y``) costs the hover duration; flying costs
    ``(y - x) * (1/v* - 1/v_max)``.  Anything infeasible costs ``inf``.
    """
    sensor = scenario.sensors[n - 1]
    ch, st = scenario.channel, scenario.solver
    if not scenario.s_start <= x <= y <= scenario.s_end:
        raise ValueError(f"need s_start <= x <= y <= s_end, got x={x}, y={y}")
    if x == y:
        return float(hover_time_array(x - sensor.position, sensor.bits, sensor.energy, ch, st.hover_tol_rel)[0])
    v, _ = solve_speed_array(
        np.array([x - sensor.position]),
        np.array([y - sensor.position]),
        sensor.bits,
        sensor.energy,
        ch,
        scenario.v_max,
        st.speed_tol,
    )
    v = float(v[0])
    if math.isnan(v):
        return math.inf
    return (y - x) * (1.0 / v - 1.0 / scenario.v_max)


def cost_matrices(scenario: Scenario, grid: Grid) -> list:
    st = scenario.solver
    return [
        cost_matrix(sen, grid.points, scenario.channel, scenario.v_max, st.speed_tol, st.hover_tol_rel)
        for sen in scenario.sensors
    ]


@dataclass
class CostToGoTable:
    """Cost-to-go values per stage and grid state.

    ``values[k]`` holds stage ``k + 1``; the last row is the terminal stage.
    ``x_idx``/``y_idx`` give the chosen action per state (``-1`` if none) and
    ``evaluated`` marks states whose minimisation actually ran.
    """

    points: np.ndarray
    values: np.ndarray
    x_idx: np.ndarray
    y_idx: np.ndarray
    evaluated: np.ndarray

    def J(self, n: int) -> np.ndarray:
        return self.values[n - 1]

    @property
    def states_evaluated(self) -> int:
        return int(self.evaluated.sum())


def _best_action(Q: np.ndarray, s: int):
    """Minimise ``Q[i, j]`` over ``i >= s``; ties go to smaller ``j``, then smaller ``i``."""
    sub = Q[s:]
    best = sub.min()
    if not math.isfinite(best):
        return math.inf, -1, -1
    hit = sub == best
    j = int(np.argmax(hit.any(axis=0)))
    i = int(np.argmax(hit[:, j])) + s
    return float(best), i, j


def _solve_table(scenario: Scenario, grid: Grid, mats: list, prune: bool) -> CostToGoTable:
    N = len(scenario.sensors)
    m = len(grid)
    values = np.empty((N + 1, m))
    values[N] = scenario.cruise_time
    x_idx = np.full((N, m), -1, dtype=int)
    y_idx = np.full((N, m), -1, dtype=int)
    evaluated = np.zeros((N, m), dtype=bool)

    for k in range(N - 1, -1, -1):
        Q = mats[k].cost + values[k + 1][None, :]
        s = 0
        while s < m:
            val, i, j = _best_action(Q, s)
            values[k, s], x_idx[k, s], y_idx[k, s] = val, i, j
            evaluated[k, s] = True
            if prune and i > s:
                # the optimum stays available for every later state up to x*
                values[k, s + 1 : i + 1] = val
                x_idx[k, s + 1 : i + 1] = i
                y_idx[k, s + 1 : i + 1] = j
                s = i + 1
            else:
                s += 1
    return CostToGoTable(grid.points, values, x_idx, y_idx, evaluated)


def _extract(scenario: Scenario, grid: Grid, mats: list, table: CostToGoTable, method: str) -> FlightPlan:
    N = len(scenario.sensors)
    total = float(table.values[0, 0]) if N else scenario.cruise_time
    if not math.isfinite(total):
        for n, cm in enumerate(mats, start=1):
            if not np.isfinite(cm.cost).any():
                raise InfeasibleError(f"sensor {n} has no feasible interval on the grid", sensor_index=n)
        raise InfeasibleError("sensors cannot be served in order on this grid")
    segments = []
    s = 0
    for k in range(N):
        i, j = table.x_idx[k, s], table.y_idx[k, s]
        segments.append(make_segment(k + 1, i, j, mats[k], scenario.sensors[k], scenario.channel))
        s = j
    stats = {
        "grid_points": len(grid),
        "grid_spacing_m": grid.spacing,
        "states_evaluated": table.states_evaluated,
        "states_total": N * len(grid),
    }
    return FlightPlan(segments=segments, total_time=total, method=method, stats=stats)


def dp_solve(scenario: Scenario, grid: Optional[Grid] = None, *, return_table: bool = False):
    """Exact DP over the grid, minimising every state independently."""
    return _dp(scenario, grid, prune=False, return_table=return_table)


def dp_solve_pruned(scenario: Scenario, grid: Optional[Grid] = None, *, return_table: bool = False):
    """Same optimum as :func:`dp_solve`, copying the cost-to-go across plateaus.

    Sweeping states left to right, once state ``s`` has optimal start
    ``x* > s`` the states in ``(s, x*]`` inherit its value and action without
    being minimised.
    """
    return _dp(scenario, grid, prune=True, return_table=return_table)


def _dp(scenario, grid, prune, return_table):
    grid = Grid.for_scenario(scenario) if grid is None else grid
    mats = cost_matrices(scenario, grid)
    table = _solve_table(scenario, grid, mats, prune)
    plan = _extract(scenario, grid, mats, table, "dp_pruned" if prune else "dp")
    if prune:
        plan.stats["states_skipped"] = plan.stats["states_total"] - plan.stats["states_evaluated"]
    return (plan, table) if return_table else plan


def _fold_total(scenario: Scenario, costs) -> float:
    # same association order as the backward recursion
    total = scenario.cruise_time
    for c in reversed(list(costs)):
        total = c + total
    return total


def baseline_hover_only(scenario: Scenario) -> FlightPlan:
    """Cruise at ``v_max`` and hover right above every sensor."""
    ch, st = scenario.channel, scenario.solver
    segments = []
    for n, sen in enumerate(scenario.sensors, start=1):
        T = float(hover_time_array(0.0, sen.bits, sen.energy, ch, st.hover_tol_rel)[0])
        if not math.isfinite(T):
            raise InfeasibleError(f"sensor {n} cannot be served by hovering", sensor_index=n)
        segments.append(PlanSegment(n, HOVER, sen.position, sen.position, time=T, cost=T,
                                    hover_power=sen.energy / T))
    total = _fold_total(scenario, [seg.cost for seg in segments])
    return FlightPlan(segments=segments, total_time=total, method="hover_only")


# ---------------------------------------------------------------------------
# always-collecting baseline: consecutive segments, constant transmit power


def _snr_integral(a, b, snr_scale, ch: ChannelParams):
    """Integral of ``ln(1 + c / pathloss(s))`` over ``[a, b]`` for each element."""
    if ch.alpha == 2:
        H = ch.H
        k = np.sqrt(H * H + snr_scale)

        def prim(s):
            return s * np.log1p(snr_scale / (s * s + H * H)) + 2 * k * np.arctan(s / k) - 2 * H * np.arctan(s / H)

        return prim(b) - prim(a)
    from scipy import integrate

    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(snr_scale, float))
    out = np.empty(a.shape)
    for idx in np.ndindex(a.shape):
        out[idx] = integrate.quad(lambda s: math.log1p(c[idx] / float(_pathloss(s, ch))),
                                  a[idx], b[idx], epsrel=1e-10, limit=200)[0]
    return out


def constant_power_bits(a, b, v, energy: float, ch: ChannelParams):
    """Bits delivered crossing sensor-relative ``[a, b]`` at speed ``v``
    while transmitting at the constant power that spends ``energy``."""
    a, b, v = (np.asarray(t, dtype=float) for t in (a, b, v))
    p = v * energy / (b - a)
    return 0.5 * ch.W / (v * LN2) * _snr_integral(a, b, p * ch.beta, ch)


def _constant_power_sup(a, b, energy, ch):
    # limit of the throughput as v -> 0
    if ch.alpha == 2:
        ang = np.arctan(b / ch.H) - np.arctan(a / ch.H)
        return 0.5 * ch.W * energy * ch.beta / (LN2 * (b - a) * ch.H) * ang
    from scipy import integrate

    out = np.empty(np.shape(a))
    for idx in np.ndindex(out.shape):
        out[idx] = integrate.quad(lambda s: 1.0 / float(_pathloss(s, ch)), a[idx], b[idx], epsrel=1e-10)[0]
    return 0.5 * ch.W * energy * ch.beta / (LN2 * (b - a)) * out


def constant_power_speed(a, b, bits: float, energy: float, ch: ChannelParams, v_max: float, tol: float = 1e-6):
    """Largest speed in ``(0, v_max]`` meeting ``bits`` under constant power; ``nan`` if none."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    feasible = _constant_power_sup(a, b, energy, ch) > bits
    top = feasible & (constant_power_bits(a, b, v_max, energy, ch) >= bits)
    lo = np.zeros(a.shape)
    hi = np.full(a.shape, float(v_max))
    idx = np.flatnonzero(feasible & ~top)
    sa, sb, slo, shi = a.ravel()[idx], b.ravel()[idx], lo.ravel()[idx], hi.ravel()[idx]
    for _ in range(400):
        if idx.size == 0:
            break
        mid = 0.5 * (slo + shi)
        ok = constant_power_bits(sa, sb, mid, energy, ch) >= bits
        slo = np.where(ok, mid, slo)
        shi = np.where(ok, shi, mid)
        done = (shi - slo <= tol) & (slo > 0)
        if done.any():
            lo.ravel()[idx[done]] = slo[done]
            keep = ~done
            idx, sa, sb, slo, shi = idx[keep], sa[keep], sb[keep], slo[keep], shi[keep]
    lo.ravel()[idx] = slo
    v = np.where(top, float(v_max), lo)
    return np.where(feasible & (v > 0), v, np.nan)


def baseline_always_collecting(scenario: Scenario, grid: Optional[Grid] = None) -> FlightPlan:
    """Split the route into consecutive segments, one per sensor in order.

    Each sensor transmits at constant power over its whole segment; the
    segment boundaries are chosen on the grid by a forward DP.
    """
    grid = Grid.for_scenario(scenario) if grid is None else grid
    pts = grid.points
    m = pts.size
    N = len(scenario.sensors)
    if N == 0:
        return FlightPlan([], scenario.cruise_time, method="always_collecting")
    ch, st = scenario.channel, scenario.solver
    iu, ju = np.triu_indices(m, k=1)

    speeds = []
    best = np.full(m, np.inf)
    best[0] = 0.0
    back = []
    for n, sen in enumerate(scenario.sensors, start=1):
        v = constant_power_speed(pts[iu] - sen.position, pts[ju] - sen.position, sen.bits, sen.energy,
                                 ch, scenario.v_max, st.speed_tol)
        K = np.full((m, m), np.inf)
        with np.errstate(invalid="ignore"):
            K[iu, ju] = np.where(np.isnan(v), np.inf, (pts[ju] - pts[iu]) * (1.0 / v - 1.0 / scenario.v_max))
        V = np.full((m, m), np.nan)
        V[iu, ju] = v
        speeds.append((K, V))
        tot = best[:, None] + K
        arg = np.argmin(tot, axis=0)  # smallest boundary on ties
        best = tot[arg, np.arange(m)]
        back.append(arg)

    if not math.isfinite(best[m - 1]):
        raise InfeasibleError("no consecutive partition serves every sensor")
    bounds = [m - 1]
    for n in range(N - 1, -1, -1):
        bounds.append(int(back[n][bounds[-1]]))
    bounds.reverse()

    segments = []
    for n, sen in enumerate(scenario.sensors, start=1):
        i, j = bounds[n - 1], bounds[n]
        K, V = speeds[n - 1]
        v = float(V[i, j])
        x, y = float(pts[i]), float(pts[j])
        segments.append(PlanSegment(n, FLY, x, y, time=(y - x) / v, cost=float(K[i, j]), speed=v,
                                    constant_power=v * sen.energy / (y - x)))
    total = _fold_total(scenario, [seg.cost for seg in segments])
    return FlightPlan(segments=segments, total_time=total, method="always_collecting",
                      stats={"grid_points": m, "grid_spacing_m": grid.spacing})
