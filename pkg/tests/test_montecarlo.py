import math

import numpy as np
import pytest

from uavflight import ScenarioError
from uavflight.montecarlo import (
    EnsembleConfig,
    accepted_means,
    aggregate,
    run_trials,
    sample_scenario,
    sweep_all,
    sweep_average_time,
)
from uavflight.single_sensor import feasibility, feasibility_threshold

from conftest import CH


def test_same_seed_same_scenario():
    cfg = EnsembleConfig(mean_bits=3e6, mean_energy=0.5, seed=11)
    assert sample_scenario(cfg, 4) == sample_scenario(cfg, 4)
    assert sample_scenario(cfg, 4) != sample_scenario(cfg, 5)


def test_positions_sorted_inside_route():
    sc = sample_scenario(EnsembleConfig(mean_bits=3e6, mean_energy=0.5), 0)
    pos = [s.position for s in sc.sensors]
    assert len(pos) == 10 and pos == sorted(pos)
    assert 0.0 <= pos[0] and pos[-1] <= 10_000.0


def test_accepted_pairs_strictly_feasible():
    cfg = EnsembleConfig(mean_bits=6e7, mean_energy=0.5, sensor_count=2000, feasibility_margin=0.0)
    for s in sample_scenario(cfg).sensors:
        assert s.bits < feasibility_threshold(s, CH)
        assert feasibility(s, CH)


def test_accepted_means_against_sampling():
    cfg = EnsembleConfig(mean_bits=3e7, mean_energy=0.3, sensor_count=100_000, seed=5)
    sc = sample_scenario(cfg)
    b = np.array([s.bits for s in sc.sensors])
    e = np.array([s.energy for s in sc.sensors])
    # independent rejection sampler
    rng = np.random.default_rng(99)
    k = 0.5 * feasibility_threshold(type(sc.sensors[0])(0.0, 1.0, 1.0), CH)
    bb = rng.uniform(0, 6e7, 2_000_000)
    ee = rng.uniform(0, 0.6, 2_000_000)
    keep = bb < k * ee
    mb, me = accepted_means(cfg)
    assert b.mean() == pytest.approx(bb[keep].mean(), rel=0.02)
    assert e.mean() == pytest.approx(ee[keep].mean(), rel=0.02)
    assert mb == pytest.approx(bb[keep].mean(), rel=0.01)
    assert me == pytest.approx(ee[keep].mean(), rel=0.01)


def test_means_barely_truncated_for_small_bits():
    # rejection only below e = 2e3 / k, about 3e-5 J
    mb, me = accepted_means(EnsembleConfig(mean_bits=1e3, mean_energy=1.0))
    assert mb == pytest.approx(1e3, rel=1e-4) and me == pytest.approx(1.0, rel=1e-4)


def test_rejection_cap():
    cfg = EnsembleConfig(mean_bits=1e8, mean_energy=1e-6, sensor_count=1)
    with pytest.raises(ScenarioError):
        sample_scenario(cfg)


@pytest.mark.parametrize("kw", [{"trials": 0}, {"mean_bits": 0.0}, {"feasibility_margin": 1.0},
                                {"s_start": 5.0, "s_end": 5.0}])
def test_config_validation(kw):
    base = dict(mean_bits=1e6, mean_energy=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        EnsembleConfig(**base)


def test_with_param():
    cfg = EnsembleConfig(mean_bits=1e6, mean_energy=1.0)
    assert cfg.with_param("B", 2e6).mean_bits == 2e6
    assert cfg.with_param("E", 0.3).mean_energy == 0.3
    with pytest.raises(ValueError):
        cfg.with_param("H", 1.0)


def test_workers_do_not_change_results():
    cfg = EnsembleConfig(mean_bits=2e6, mean_energy=0.5, trials=4, sensor_count=4, seed=3)
    a = run_trials(cfg, ("dp", "hover"), workers=1)
    b = run_trials(cfg, ("dp", "hover"), workers=2)
    np.testing.assert_array_equal(a, b)


def test_aggregate_counts_failures():
    cfg = EnsembleConfig(mean_bits=2e6, mean_energy=0.5)
    p = aggregate(1.0, [10.0, math.nan, 14.0], cfg)
    assert p.trials == 2 and p.failures == 1 and p.flagged
    assert p.mean_time == 12.0 and p.std_time == pytest.approx(math.sqrt(8.0))


def test_unknown_solver():
    with pytest.raises(ValueError):
        run_trials(EnsembleConfig(mean_bits=2e6, mean_energy=0.5, trials=1), ("fastest",))


def test_small_sweep_shapes():
    cfg = EnsembleConfig(mean_bits=3e6, mean_energy=0.5, trials=8, seed=1)
    curve = sweep_average_time(cfg, "B", [1e6, 3e6, 5e6])
    t = [p.mean_time for p in curve]
    assert t[0] < t[1] < t[2]
    curves, raw = sweep_all(cfg, "E", [0.2, 0.8], solvers=("dp", "hover_only"))
    assert raw.shape == (2, 8, 2)
    assert np.all(raw[..., 0] <= raw[..., 1])
    assert curves["dp"][0].mean_time >= curves["dp"][1].mean_time
