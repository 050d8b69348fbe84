import pytest

from uavoffload import engine
from uavoffload.scenario import Mode, build_scenario


@pytest.fixture(scope="module")
def short_runs():
    from uavoffload.scenario import ScenarioConfig
    cfg = ScenarioConfig().replace(seed=11)
    return cfg, engine.run_policies(build_scenario(cfg), 8, engine.POLICIES)


def test_run_is_deterministic(short_runs):
    cfg, res = short_runs
    again = engine.run_policies(build_scenario(cfg), 8, engine.POLICIES)
    assert again == res


def test_single_slot_average(short_runs):
    cfg, _ = short_runs
    r = engine.run_horizon(build_scenario(cfg), 1, "mvtora")
    assert r.time_avg_system_utility == r.slots[0].system_utility


def test_elc_all_local(short_runs):
    _, res = short_runs
    for s in res["elc"].slots:
        assert all(o.mode is Mode.LOCAL for o in s.outcomes)


def test_mvtora_beats_baselines_every_slot(short_runs):
    _, res = short_runs
    for t, s in enumerate(res["mvtora"].slots):
        for b in ("elc", "emc", "vto", "mto"):
            assert s.system_utility >= res[b].slots[t].system_utility - 1e-12


def test_drop_accounting(short_runs):
    _, res = short_runs
    for r in res.values():
        for s in r.slots:
            for o in s.outcomes:
                if o.dropped:
                    assert o.utility == 0.0 and o.energy_j == 0.0


def test_emc_total_capacity(short_runs):
    cfg, _ = short_runs
    sim = engine.Simulation(build_scenario(cfg))
    snap = sim.snapshot()
    ctx = snap.game_context(None)
    outs, alloc = ctx.allocate(range(len(ctx)))
    assert alloc.total_hz <= cfg.network.euav_max_freq_hz * (1 + 1e-12)


def test_todo_even_shares(short_runs):
    cfg, _ = short_runs
    snap = engine.Simulation(build_scenario(cfg)).snapshot()
    ctx = snap.game_context(snap.random_vfc, allocator="even")
    _, alloc = ctx.allocate(range(4))
    assert all(f == pytest.approx(7.5e9) for f in alloc.shares_hz.values())


def test_idle_slot_zero():
    from uavoffload.scenario import ScenarioConfig
    cfg = ScenarioConfig().replace(tasks__task_prob=(0.0, 0.0))
    r = engine.run_horizon(build_scenario(cfg), 2, "mvtora")
    assert all(s.system_utility == 0.0 and s.n_tasks == 0 for s in r.slots)


def test_prime_vfc_matches_lazy(short_runs):
    cfg, _ = short_runs
    sim = engine.Simulation(build_scenario(cfg))
    a = sim.snapshot()
    b = engine.Simulation(build_scenario(cfg)).snapshot()
    engine.prime_vfc([a])
    assert a.optimized_vfc == b.optimized_vfc


def test_unknown_policy():
    with pytest.raises(ValueError):
        engine.baseline_policy("greedy")


def test_sweep_shape_and_invariance(short_runs):
    cfg, _ = short_runs
    rows = engine.sweep(cfg, "euav-freq", [10, 20, 30], ["elc", "emc"], [0], 3)
    assert len(rows) == 6
    elc = {r.tsu for r in rows if r.policy == "elc"}
    assert len(elc) == 1
    with pytest.raises(ValueError):
        engine.sweep(cfg, "bogus", [1], ["elc"], [0], 1)
