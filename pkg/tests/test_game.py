import itertools
import math

import pytest

from uavoffload import game, verify
from uavoffload.cost import ModeOutcome, local_outcome
from uavoffload.scenario import Mode, Task, stream

L, M, V = Mode.LOCAL, Mode.MEC, Mode.VEH


def _ctx(cfg, seed, n, fmax=None):
    return verify.random_context(cfg, stream(seed, "test-game", n), n, fmax)


def test_potential_all_local_is_local_welfare(cfg):
    ctx = _ctx(cfg, 0, 4)
    modes = (L,) * 4
    for n in range(4):
        others = sum(game._local_term(p) for j, p in enumerate(ctx.players) if j != n)
        assert game.potential(ctx, modes, n) == others + ctx.players[n].local.utility
    feasible = [p for p in ctx.players if p.local.feasible]
    ctx = game.GameContext(tuple(feasible), ctx.max_freq_hz, ctx.utility, ctx.tx_power_u2u_w)
    want = sum(p.local.utility for p in feasible)
    assert game.potential(ctx, (L,) * len(feasible), 0) == pytest.approx(want)


@pytest.mark.parametrize("seed", range(5))
def test_exact_potential_identity(cfg, seed):
    ctx = _ctx(cfg, seed, 3, 15e9)
    assert verify.potential_residuals(ctx) < 1e-9


def test_single_player_mec_wins(cfg, up):
    t = Task(2e6, 500, 1.0)
    local = local_outcome(t, 1e9, up)  # T = 1.0 s: revenue 0
    p = game.Player(0, t, local, 2e7, ModeOutcome(0.9, 0.0, 0.0, True))
    ctx = game.GameContext((p,), 30e9, up, 0.1)
    res = game.run_game(ctx)
    assert res.modes == (M,) and res.rounds == 2  # one change, one confirming round
    assert game.is_nash(ctx, res.modes)


def test_converged_start_returns_in_one_round(cfg):
    ctx = _ctx(cfg, 1, 6)
    first = game.run_game(ctx)
    again = game.run_game(ctx, game.GameState(first.modes, first.state.initial, first.state.baseline))
    assert again.rounds == 1 and again.modes == first.modes


@pytest.mark.parametrize("seed", range(5))
def test_three_player_result_is_nash(cfg, seed):
    ctx = _ctx(cfg, seed, 3, 10e9)
    res = game.run_game(ctx)
    assert game.certificate_violations(ctx, res.state) == []


def test_potential_monotone_n15(cfg):
    r = verify.convergence_run(cfg, 15, 4)
    assert r["non_increasing"] == 0 and r["rounds"] <= r["cap"]


def test_round_cap_raises(cfg):
    ctx = _ctx(cfg, 2, 10, 30e9)
    res = game.run_game(ctx)
    if res.rounds > 1:
        with pytest.raises(game.GameError):
            game.run_game(ctx, max_rounds=res.rounds - 1)


def test_poa_bounds(cfg):
    done = 0
    for k in range(30):
        ctx = _ctx(cfg, 100 + k, 3, 8e9)
        try:
            r = game.poa_eval(ctx)
        except ValueError:
            continue
        assert r.lower_bound <= r.poa + 1e-12 and r.poa <= 1.0
        done += 1
    assert done > 5


def test_poa_one_when_mec_never_helps(cfg, up):
    t = Task(2e6, 500, 1.0)
    local = local_outcome(t, 2e9, up)
    # rate so low that MEC cannot meet the log domain
    players = tuple(game.Player(i, t, local, 1e6, None) for i in range(3))
    ctx = game.GameContext(players, 30e9, up, 0.1)
    r = game.poa_eval(ctx)
    assert r.poa == 1.0


def test_poa_rejects_large_games(cfg):
    with pytest.raises(ValueError):
        game.poa_eval(_ctx(cfg, 0, 5))
