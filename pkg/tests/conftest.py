import numpy as np
import pytest

from uavflight import ChannelParams, Scenario, SensorSpec

# default channel: H=100 m, beta=80 dB, W=20 kHz, alpha=2
CH = ChannelParams()
V_MAX = 26.0


@pytest.fixture
def ch():
    return CH


def single(bits, energy, s0=-5000.0, s1=5000.0, grid=201, position=0.0, ch=CH):
    from uavflight import SolverSettings

    return Scenario(s0, s1, V_MAX, (SensorSpec(position, bits, energy),), ch, SolverSettings(grid_points=grid))


def ten_sensor(b_sparse=3e6, b8=7e6):
    pos = [500, 2500, 4500, 6500, 7000, 7500, 8000, 8500, 9000, 9500]
    bits = [b_sparse] * 4 + [2.5e6, b_sparse, 3.5e6, b8, 3.5e6, b_sparse]
    return Scenario(0.0, 10_000.0, V_MAX, tuple(SensorSpec(float(p), b, 1.2) for p, b in zip(pos, bits)), CH)


def random_scenario(rng: np.random.Generator, n: int, length=2000.0, grid=41, margin=0.3):
    from uavflight import SolverSettings
    from uavflight.single_sensor import feasibility_threshold

    pos = np.sort(rng.uniform(0, length, n))
    while np.any(np.diff(pos) <= 0):
        pos = np.sort(rng.uniform(0, length, n))
    sensors = []
    for p in pos:
        e = rng.uniform(0.2, 2.0)
        thr = feasibility_threshold(SensorSpec(0.0, 1.0, e), CH)
        sensors.append(SensorSpec(float(p), float(rng.uniform(0.05, 1 - margin) * thr * 0.05), float(e)))
    return Scenario(0.0, length, V_MAX, tuple(sensors), CH, SolverSettings(grid_points=grid))
