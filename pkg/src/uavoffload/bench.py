"""Per-slot timing of MVTORA against the number of C-UAVs."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import game
from .engine import Simulation, prime_vfc
from .scenario import ScenarioConfig, build_scenario


@dataclass(frozen=True)
class BenchRow:
    n_cuavs: int
    slots: int
    players: float      # mean task-bearing C-UAVs per slot
    rounds: float       # mean I_c
    slot_s: float       # mean wall time of a full slot (snapshot, GA, game)
    game_s: float       # mean wall time of the game phase
    game_per_round_s: float


def config_for_n(config: ScenarioConfig, n: int) -> ScenarioConfig:
    """Grow the square area (same cell size, same vehicle density) until it holds ``n`` cells."""
    side = max(config.network.cells_per_side, math.ceil(math.sqrt(n)))
    return config.replace(network__n_cuavs=n, network__area_side_m=side * config.network.grid_side_m)


def bench(config: ScenarioConfig, ns: Sequence[int], slots: int = 5, repeats: int = 3) -> list:
    rows = []
    for n in ns:
        cfg = config_for_n(config, n)
        best_game = best_slot = math.inf
        for _ in range(repeats):
            sim = Simulation(build_scenario(cfg))
            t_game = t_slot = 0.0
            rounds = players = 0
            for _ in range(slots):
                t0 = time.perf_counter()
                snap = sim.snapshot()
                prime_vfc([snap])
                ctx = snap.game_context(snap.optimized_vfc)
                t1 = time.perf_counter()
                res = game.run_game(ctx)
                t2 = time.perf_counter()
                t_game += t2 - t1
                t_slot += t2 - t0
                rounds += res.rounds
                players += len(ctx)
                sim.advance()
            best_game, best_slot = min(best_game, t_game), min(best_slot, t_slot)
        rows.append(BenchRow(n, slots, players / slots, rounds / slots, best_slot / slots,
                             best_game / slots, best_game / max(rounds, 1)))
    return rows


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
