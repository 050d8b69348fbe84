import math

import numpy as np
import pytest

from uavoffload import mobility
from uavoffload.scenario import (ConfigError, CUavState, Mode, MobilityParams, ScenarioConfig, Task,
                                 VehicleState, build_scenario, load_config, spawn_task, stream)


def test_empty_config_defaults():
    cfg = load_config("")
    assert cfg == ScenarioConfig()
    assert cfg.network.n_cuavs == 15 and cfg.network.area_side_m == 2000.0


def test_config_echoes_values():
    cfg = load_config("[network]\nF_u_max = 30\nK_n = 5\n[channel]\nPsi = 0.7853981633974483\n")
    assert cfg.network.euav_max_freq_hz == 30e9
    assert cfg.network.subchannels == 5
    assert cfg.channel.beamwidth_half_rad == pytest.approx(math.pi / 4)


def test_config_errors():
    with pytest.raises(ConfigError, match="delay_weight"):
        load_config("[utility]\nalpha_n = 0.7\nbeta_n = 0.1\n")
    with pytest.raises(ConfigError, match="parse"):
        load_config("[network\n")
    with pytest.raises(ConfigError, match="unknown"):
        load_config("[network]\nbogus = 1\n")
    with pytest.raises(ConfigError, match="K_n"):
        load_config("[network]\nK_n = 0\n")


def _cuav(p):
    return CUavState((0, 0, 100), 20.0, 0.0, p, 1e9, 5)


def test_spawn_task_probabilities(cfg):
    assert all(spawn_task(_cuav(1.0), cfg.tasks, stream(0, "t", i)) is not None for i in range(50))
    assert all(spawn_task(_cuav(0.0), cfg.tasks, stream(0, "t", i)) is None for i in range(50))
    rng = np.random.default_rng(0)
    hits = sum(spawn_task(_cuav(0.9), cfg.tasks, rng) is not None for _ in range(100_000))
    assert abs(hits / 100_000 - 0.9) < 0.01


def test_task_validation():
    with pytest.raises(ValueError):
        Task(0.0, 100, 1.0)


def test_streams_independent_and_reproducible():
    a = stream(3, "tasks", 1, 2).random(4)
    assert np.array_equal(a, stream(3, "tasks", 1, 2).random(4))
    assert not np.array_equal(a, stream(3, "tasks", 1, 3).random(4))
    assert not np.array_equal(a, stream(3, "mobility", 1, 2).random(4))


def test_poisson_vehicle_count_moments():
    counts = [len(mobility.place_fleet(2000.0, 200.0, stream(s, "veh"))) for s in range(2000)]
    assert np.mean(counts) == pytest.approx(800, abs=2.0)
    assert np.std(counts) == pytest.approx(math.sqrt(800), rel=0.06)
    assert len(mobility.place_vehicles(2000.0, 1e-9, stream(0, "veh"))) == 0


def test_gauss_markov_limits():
    v = VehicleState((0.0, 0.0, 0.0), 10.0, 0.3, 5e8)
    full = MobilityParams(memory_degree=1.0)
    out = mobility.step_vehicle(v, full, stream(0, "m"))
    assert out.speed_mps == 10.0 and out.heading_rad == 0.3
    memless = MobilityParams(memory_degree=0.0, speed_std=0.0, heading_std=0.0)
    out = mobility.step_vehicle(v, memless, stream(0, "m"))
    assert out.speed_mps == memless.mean_speed_mps
    out = mobility.step_vehicle(VehicleState((0.0, 0.0, 0.0), 10.0, 0.0, 5e8), full, stream(0, "m"))
    assert out.position_m[0] == pytest.approx(10.0) and out.position_m[1] == 0.0


def test_cuav_orbit():
    c = CUavState((0, 0, 100), 20.0, 0.0, 1.0, 1e9, 5, orbit_center_m=(200.0, -200.0), orbit_phase_rad=0.4)
    period = 2 * math.pi * 100 / 20
    for t in (0, 3, 17):
        p = mobility.step_cuav(c, t)
        assert math.hypot(p.position_m[0] - 200.0, p.position_m[1] + 200.0) == pytest.approx(100.0)
        assert p.position_m[2] == 100.0
    a, b = mobility.step_cuav(c, 2.0), mobility.step_cuav(c, 2.0 + period)
    assert a.position_m == pytest.approx(b.position_m)


def test_build_scenario_deterministic(cfg):
    a, b = build_scenario(cfg), build_scenario(cfg)
    assert a == b
    assert len(a.cuavs) == 15
    assert len({c.orbit_center_m for c in a.cuavs}) == 15


def test_mode_values():
    assert {m.value for m in Mode} == {"local", "mec", "veh"}
