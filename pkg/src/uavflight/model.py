"""Scenario, grid and plan data types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from uavflight.channel import ChannelParams
from uavflight.errors import InfeasibleError, ScenarioError

HOVER = "hover"
FLY = "fly"


@dataclass(frozen=True)
class SensorSpec:
    """One ground sensor: position (m), data requirement (bits), energy budget (J)."""

    position: float
    bits: float
    energy: float

    def __post_init__(self):
        if not self.bits > 0:
            raise ValueError(f"sensor bits must be positive, got {self.bits}")
        if not self.energy > 0:
            raise ValueError(f"sensor energy must be positive, got {self.energy}")


@dataclass(frozen=True)
class Interval:
    x: float
    y: float

    def __post_init__(self):
        if self.x > self.y:
            raise ValueError(f"interval needs x <= y, got [{self.x}, {self.y}]")

    @property
    def width(self) -> float:
        return self.y - self.x

    @property
    def is_hover(self) -> bool:
        return self.x == self.y


@dataclass(frozen=True)
class SolverSettings:
    grid_points: int = 201
    speed_tol: float = 1e-6
    hover_tol_rel: float = 1e-9

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if not self.speed_tol > 0 or not self.hover_tol_rel > 0:
            raise ValueError("solver tolerances must be positive")


@dataclass(frozen=True)
class Scenario:
    """Route endpoints, UAV speed cap, ordered sensors and the channel.

    Construction validates the geometry and that every sensor can deliver
    its data at all (hovering directly overhead for as long as needed).
    """

    s_start: float
    s_end: float
    v_max: float
    sensors: tuple = ()
    channel: ChannelParams = field(default_factory=ChannelParams)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if not self.s_start < self.s_end:
            raise ScenarioError(f"s_start ({self.s_start}) must be below s_end ({self.s_end})")
        if not self.v_max > 0:
            raise ScenarioError(f"v_max must be positive, got {self.v_max}")
        prev = -np.inf
        for n, sen in enumerate(self.sensors, start=1):
            if not self.s_start <= sen.position <= self.s_end:
                raise ScenarioError(f"sensor {n} at {sen.position} m lies outside the route")
            if not sen.position > prev:
                raise ScenarioError("sensor positions must be strictly increasing")
            prev = sen.position

        from uavflight.single_sensor import feasibility, feasibility_threshold

        offenders = [
            (n, feasibility_threshold(sen, self.channel))
            for n, sen in enumerate(self.sensors, start=1)
            if not feasibility(sen, self.channel)
        ]
        if offenders:
            detail = "; ".join(
                f"sensor {n}: bits={self.sensors[n - 1].bits:.6g} >= threshold {thr:.6g}"
                for n, thr in offenders
            )
            err = InfeasibleError(
                f"infeasible sensors ({detail})",
                sensor_index=offenders[0][0],
                threshold=offenders[0][1],
            )
            err.offenders = offenders
            raise err

    @property
    def length(self) -> float:
        return self.s_end - self.s_start

    @property
    def cruise_time(self) -> float:
        """Time to fly the whole route at ``v_max``."""
        return (self.s_end - self.s_start) / self.v_max

    def with_sensors(self, sensors) -> "Scenario":
        return Scenario(self.s_start, self.s_end, self.v_max, tuple(sensors), self.channel, self.solver)


@dataclass(frozen=True, eq=False)
class Grid:
    """Sorted candidate positions for interval endpoints and DP states.

    The base is ``m`` uniformly spaced points on ``[start, end]``.  Extra
    ``anchors`` (sensor positions) may be merged in so that hovering right
    above a sensor is always a candidate action.
    """

    points: np.ndarray
    spacing: float

    @classmethod
    def uniform(cls, start: float, end: float, m: int, anchors=()) -> "Grid":
        if m < 2:
            raise ValueError("grid needs at least 2 points")
        base = np.linspace(start, end, m)
        base[0], base[-1] = start, end
        pts = base
        if len(anchors):
            pts = np.union1d(base, np.asarray(anchors, dtype=float))
        pts.setflags(write=False)
        return cls(points=pts, spacing=(end - start) / (m - 1))

    @classmethod
    def for_scenario(cls, scenario: Scenario, m: Optional[int] = None, anchor_sensors: bool = True) -> "Grid":
        m = scenario.solver.grid_points if m is None else m
        anchors = [s.position for s in scenario.sensors] if anchor_sensors else ()
        return cls.uniform(scenario.s_start, scenario.s_end, m, anchors)

    def __len__(self) -> int:
        return self.points.size

    def index(self, value: float) -> int:
        i = int(np.searchsorted(self.points, value))
        if i < self.points.size and self.points[i] == value:
            return i
        raise KeyError(f"{value} is not a grid point")


@dataclass(frozen=True)
class PlanSegment:
    """Collection decision for one sensor.

    ``time`` is the time spent on the interval (hover duration, or width
    over speed).  ``cost`` is the overhead relative to crossing the same
    interval at ``v_max``.
    """

    sensor_index: int
    mode: str
    x: float
    y: float
    time: float
    cost: float
    speed: Optional[float] = None
    water_level: Optional[float] = None
    hover_power: Optional[float] = None
    constant_power: Optional[float] = None

    @property
    def interval(self) -> Interval:
        return Interval(self.x, self.y)


@dataclass
class FlightPlan:
    segments: list
    total_time: float
    method: str = "dp"
    stats: dict = field(default_factory=dict)

    def check_ordering(self, scenario: Scenario) -> bool:
        edges = [scenario.s_start]
        for seg in self.segments:
            edges += [seg.x, seg.y]
        edges.append(scenario.s_end)
        return all(a <= b for a, b in zip(edges[:-1], edges[1:]))

    def recomputed_total(self, scenario: Scenario) -> float:
        return scenario.cruise_time + sum(seg.cost for seg in self.segments)
