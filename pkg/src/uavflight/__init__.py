"""Minimum flight-time planning for a UAV collecting data from line-deployed sensors."""

from uavflight.channel import (
    ChannelParams,
    instantaneous_rate,
    inverse_gain,
    pathloss_integral,
)
from uavflight.errors import ConditionViolatedError, InfeasibleError, ScenarioError
from uavflight.model import FlightPlan, Grid, PlanSegment, Scenario, SensorSpec, SolverSettings
from uavflight.planner import (
    baseline_always_collecting,
    baseline_hover_only,
    dp_solve,
    dp_solve_pruned,
    stage_cost,
)
from uavflight.single_sensor import (
    feasibility,
    feasibility_threshold,
    hover_time,
    max_throughput,
    min_speed,
    power_profile,
    single_sensor_plan,
    solve_speed,
    water_level,
)

__all__ = [
    "ChannelParams",
    "ConditionViolatedError",
    "FlightPlan",
    "Grid",
    "InfeasibleError",
    "PlanSegment",
    "Scenario",
    "ScenarioError",
    "SensorSpec",
    "SolverSettings",
    "baseline_always_collecting",
    "baseline_hover_only",
    "dp_solve",
    "dp_solve_pruned",
    "feasibility",
    "feasibility_threshold",
    "hover_time",
    "instantaneous_rate",
    "inverse_gain",
    "max_throughput",
    "min_speed",
    "pathloss_integral",
    "power_profile",
    "single_sensor_plan",
    "solve_speed",
    "stage_cost",
    "water_level",
]
