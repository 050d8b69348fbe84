"""Slot-by-slot simulation of MVTORA and the comparison policies.

All policies evaluated in one run see the same slot snapshots: vehicle
positions, spawned tasks, channel rates and (where used) the GA task
divisions come from streams keyed only by seed, slot and C-UAV id. Policy
specific randomness (TODO's random fog selection) has its own stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from . import channel, cost, game, mobility, vfc
from .scenario import (Decision, Mode, OffloadProfile, Scenario, ScenarioConfig, build_scenario,
                       spawn_task, stream)

POLICIES = ("mvtora", "elc", "emc", "vto", "mto", "todo")
BASELINES = ("elc", "emc", "vto", "mto", "todo")
SWEEP_PARAMS = ("euav-freq", "task-density", "veh-density")


@dataclass(frozen=True)
class UavOutcome:
    uav: int
    mode: Mode
    utility: float
    delay_s: float
    energy_j: float
    dropped: bool = False


@dataclass(frozen=True)
class SlotMetrics:
    slot: int
    policy: str
    system_utility: float
    outcomes: tuple
    dropped_count: int
    profile: OffloadProfile
    game_rounds: int = 0

    @property
    def n_tasks(self) -> int:
        return len(self.outcomes)

    def count(self, mode: Mode) -> int:
        return sum(1 for o in self.outcomes if o.mode is mode and not o.dropped)

    @property
    def total_delay_s(self) -> float:
        return sum(o.delay_s for o in self.outcomes)

    @property
    def avg_delay_s(self) -> float:
        return self.total_delay_s / self.n_tasks if self.outcomes else 0.0

    @property
    def total_energy_j(self) -> float:
        return sum(o.energy_j for o in self.outcomes)


@dataclass(frozen=True)
class RunResult:
    policy: str
    slots: tuple
    time_avg_system_utility: float
    avg_completion_delay_s: float
    total_energy_j: float
    drops: int

    @classmethod
    def from_slots(cls, policy: str, slots: Sequence[SlotMetrics]) -> "RunResult":
        tsu = 0.0
        for s in slots:
            tsu += s.system_utility
        n_tasks = sum(s.n_tasks for s in slots)
        delay = sum(s.total_delay_s for s in slots) / n_tasks if n_tasks else 0.0
        return cls(policy, tuple(slots), tsu / len(slots), delay,
                   sum(s.total_energy_j for s in slots), sum(s.dropped_count for s in slots))


# ---------------------------------------------------------------------------
# slot snapshot


@dataclass(frozen=True)
class VfcPlan:
    fog_set: tuple
    division: tuple
    outcome: cost.ModeOutcome


@dataclass
class PlayerInfo:
    uav: int
    task: object
    local: cost.ModeOutcome
    rate_u2u: float
    candidates: tuple  # vfc.Candidate, disjoint across C-UAVs
    subchannels: int


@dataclass
class SlotSnapshot:
    scenario: Scenario
    slot: int
    players: list = field(default_factory=list)
    # MEC outcomes depend only on the member set, capacity and allocator,
    # so policies evaluated on this snapshot share them
    mec_cache: dict = field(default_factory=dict, repr=False)

    @property
    def config(self) -> ScenarioConfig:
        return self.scenario.config

    def vfc_problems(self) -> tuple:
        """(owner index, chosen candidates, DivisionProblem, rng) for every player with fog nodes."""
        cfg = self.config
        out = []
        for i, p in enumerate(self.players):
            try:
                chosen = vfc.select_fog_nodes(p.task, p.candidates, p.subchannels)
            except vfc.NoFogNodes:
                continue
            prob = vfc.DivisionProblem(p.task, tuple(c.rate_bps for c in chosen),
                                       tuple(c.freq_hz for c in chosen), cfg.channel.tx_power_u2v_w)
            out.append((i, chosen, prob, stream(cfg.seed, "ga", self.slot, p.uav)))
        return tuple(out)

    def vfc_plans(self, problems, results) -> list:
        plans: list = [None] * len(self.players)
        for (i, chosen, prob, _), res in zip(problems, results):
            out = cost.vfc_outcome(prob.task, res.division, prob.rates, prob.freqs,
                                   prob.tx_power_w, self.config.utility)
            plans[i] = VfcPlan(tuple(c.vehicle for c in chosen), res.division, out)
        return plans

    @cached_property
    def optimized_vfc(self) -> list:
        """Preference-ranked fog set plus GA division, per player (None if no fog node)."""
        probs = self.vfc_problems()
        res = vfc.ga_divide_many([q[2] for q in probs], self.config.ga, self.config.utility,
                                 [q[3] for q in probs])
        return self.vfc_plans(probs, res)

    @cached_property
    def random_vfc(self) -> list:
        """Uniformly random fog set with an even split (the TODO baseline)."""
        cfg = self.config
        rng = stream(cfg.seed, "policy", self.slot)
        plans: list = []
        for p in self.players:
            usable = [c for c in p.candidates if c.freq_hz > 0]
            if not usable:
                plans.append(None)
                continue
            k = min(p.subchannels, len(usable))
            pick = sorted(rng.choice(len(usable), size=k, replace=False).tolist())
            chosen = [usable[j] for j in pick]
            lam = tuple([1.0 / k] * k)
            out = cost.vfc_outcome(p.task, lam, [c.rate_bps for c in chosen],
                                   [c.freq_hz for c in chosen], cfg.channel.tx_power_u2v_w, cfg.utility)
            plans.append(VfcPlan(tuple(c.vehicle for c in chosen), lam, out))
        return plans

    def game_context(self, plans: Optional[list], allocator: str = "kkt",
                     max_freq_hz: float = None) -> game.GameContext:
        cfg = self.config
        players = []
        for i, p in enumerate(self.players):
            plan = plans[i] if plans is not None else None
            players.append(game.Player(
                uav=p.uav, task=p.task, local=p.local, rate_u2u=p.rate_u2u,
                veh=plan.outcome if plan else None,
                fog_set=plan.fog_set if plan else (), division=plan.division if plan else (),
            ))
        fmax = cfg.network.euav_max_freq_hz if max_freq_hz is None else max_freq_hz
        return game.GameContext(
            players=tuple(players), max_freq_hz=fmax,
            utility=cfg.utility, tx_power_u2u_w=cfg.channel.tx_power_u2u_w,
            allocator=allocator, tol=cfg.network.bisection_tol,
            _cache=self.mec_cache.setdefault((allocator, fmax), {}),
        )


def prime_vfc(snaps: Sequence[SlotSnapshot], chunk: int = 256) -> None:
    """Fill ``optimized_vfc`` for many snapshots with batched GA runs.

    Every problem draws from its own stream, so the plans equal the ones
    computed snapshot by snapshot; batching only amortises numpy overhead.
    """
    todo = [s for s in snaps if "optimized_vfc" not in s.__dict__]
    if not todo:
        return
    per_snap = [s.vfc_problems() for s in todo]
    flat = [q for qs in per_snap for q in qs]
    cfg = todo[0].config
    results = []
    for a in range(0, len(flat), chunk):
        part = flat[a:a + chunk]
        results += vfc.ga_divide_many([q[2] for q in part], cfg.ga, cfg.utility, [q[3] for q in part])
    k = 0
    for s, qs in zip(todo, per_snap):
        s.__dict__["optimized_vfc"] = s.vfc_plans(qs, results[k:k + len(qs)])
        k += len(qs)


def take_snapshot(scenario: Scenario, slot: int, cuavs: Sequence, fleet: mobility.Fleet) -> SlotSnapshot:
    cfg = scenario.config
    ch, net = cfg.channel, cfg.network
    snap = SlotSnapshot(scenario, slot)
    radius = channel.footprint_radius(net.cuav_altitude_m, ch.beamwidth_half_rad)
    claimed = np.zeros(len(fleet), dtype=bool)
    for n, c in enumerate(cuavs):
        task = spawn_task(c, cfg.tasks, stream(cfg.seed, "tasks", slot, n))
        # footprints of distinct C-UAVs never overlap by construction; the
        # claimed mask only guards the measure-zero shared boundary
        dx, dy = fleet.x - c.position_m[0], fleet.y - c.position_m[1]
        near = np.flatnonzero((np.hypot(dx, dy) <= radius * (1 + 1e-12)) & ~claimed)
        claimed[near] = True
        if task is None:
            continue
        rates = channel.u2v_rates(c.position_m, fleet.x[near], fleet.y[near], ch, net.cuav_altitude_m)
        cands = tuple(vfc.Candidate(int(v), float(r), float(fleet.idle_freq[v]))
                      for v, r in zip(near, rates))
        snap.players.append(PlayerInfo(
            uav=n, task=task,
            local=cost.local_outcome(task, c.local_freq_hz, cfg.utility),
            rate_u2u=channel.u2u_rate(c.position_m, scenario.euav.position_m, c.subchannels, ch),
            candidates=cands, subchannels=c.subchannels,
        ))
    return snap


class Simulation:
    """Mutable driver: holds the vehicle fleet and the current slot index."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.fleet = mobility.Fleet.from_states(scenario.vehicles)
        self.slot = 0

    @property
    def cuavs(self) -> list:
        net = self.scenario.config.network
        dt = self.scenario.config.mobility.slot_duration_s
        return [mobility.step_cuav(c, self.slot, net.orbit_radius_m, dt) for c in self.scenario.cuavs]

    def snapshot(self) -> SlotSnapshot:
        return take_snapshot(self.scenario, self.slot, self.cuavs, self.fleet)

    def advance(self) -> None:
        cfg = self.scenario.config
        fleet = mobility.step_fleet(self.fleet, cfg.mobility, stream(cfg.seed, "mobility", self.slot),
                                    cfg.network.area_side_m)
        self.slot += 1
        self.fleet = mobility.refresh_idle_freq(fleet, stream(cfg.seed, "vehicle_freq", self.slot),
                                                cfg.network.vehicle_freq_range_hz)


# ---------------------------------------------------------------------------
# policies


def _execute(snap: SlotSnapshot, policy: str, modes: Sequence[Mode], ctx: game.GameContext,
             rounds: int = 0) -> SlotMetrics:
    mec_out, alloc = ctx.allocate(game.mec_members(modes)) if Mode.MEC in modes else ({}, None)
    outcomes, decisions = [], {}
    su, drops = 0.0, 0
    for i, (p, m) in enumerate(zip(ctx.players, modes)):
        if m is Mode.LOCAL:
            out = p.local
            dec = Decision(Mode.LOCAL)
        elif m is Mode.VEH:
            out = p.veh
            dec = Decision(Mode.VEH, fog_set=p.fog_set, division=p.division)
        else:
            out = mec_out[i]
            share = alloc.shares_hz.get(i, 0.0) if alloc is not None else 0.0
            dec = Decision(Mode.MEC, mec_freq_hz=share)
        decisions[p.uav] = dec
        if out is None or not out.feasible:
            drops += 1
            outcomes.append(UavOutcome(p.uav, m, 0.0, p.task.deadline_s, 0.0, True))
        else:
            su += out.utility
            outcomes.append(UavOutcome(p.uav, m, out.utility, out.delay_s, out.energy_j))
    return SlotMetrics(snap.slot, policy, su, tuple(outcomes), drops, OffloadProfile(decisions), rounds)


def baseline_policy(name: str):
    """Return ``f(snapshot, max_freq_hz=None) -> SlotMetrics`` for a policy name."""
    name = name.lower()
    if name not in POLICIES:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}")

    def run(snap: SlotSnapshot, max_freq_hz: float = None) -> SlotMetrics:
        n = len(snap.players)
        if name == "elc":
            ctx = snap.game_context(None, max_freq_hz=max_freq_hz)
            return _execute(snap, name, [Mode.LOCAL] * n, ctx)
        if name == "emc":
            ctx = snap.game_context(None, max_freq_hz=max_freq_hz)
            return _execute(snap, name, [Mode.MEC] * n, ctx)
        if name == "vto":
            ctx = snap.game_context(snap.optimized_vfc, max_freq_hz=max_freq_hz)
            return _execute(snap, name, game.initial_state(ctx).modes, ctx)
        if name == "mto":
            ctx = snap.game_context(None, max_freq_hz=max_freq_hz)
            res = game.run_game(ctx, game.initial_state(ctx, use_vfc=False))
        elif name == "todo":
            ctx = snap.game_context(snap.random_vfc, allocator="even", max_freq_hz=max_freq_hz)
            res = game.run_game(ctx)
        else:  # mvtora
            ctx = snap.game_context(snap.optimized_vfc, max_freq_hz=max_freq_hz)
            res = game.run_game(ctx)
        return _execute(snap, name, res.modes, ctx, res.rounds)

    run.__name__ = name
    return run


def run_slot(snap: SlotSnapshot, policy: str, max_freq_hz: float = None) -> SlotMetrics:
    return baseline_policy(policy)(snap, max_freq_hz)


def run_policies(scenario: Scenario, slots: int, policies: Iterable[str],
                 max_freqs: Sequence[float] = None) -> dict:
    """Run several policies over one shared trajectory.

    Keys are policy names, or ``(policy, max_freq_hz)`` when ``max_freqs``
    is given (every policy is then evaluated at every capacity).
    """
    if slots < 1:
        raise ValueError("need at least one slot")
    runners = {p: baseline_policy(p) for p in policies}
    keys = [(p, f) for p in runners for f in max_freqs] if max_freqs is not None else [(p, None) for p in runners]
    acc = {k: [] for k in keys}
    sim = Simulation(scenario)
    snaps = []
    for _ in range(slots):
        snaps.append(sim.snapshot())
        sim.advance()
    if {"mvtora", "vto"} & set(runners):
        prime_vfc(snaps)
    for snap in snaps:
        for p, f in keys:
            acc[(p, f)].append(runners[p](snap, f))
    out = {k: RunResult.from_slots(k[0], v) for k, v in acc.items()}
    if max_freqs is None:
        out = {k[0]: v for k, v in out.items()}
    return out


def run_horizon(scenario: Scenario, slots: int, policy: str) -> RunResult:
    return run_policies(scenario, slots, [policy])[policy]


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    param_value: float
    policy: str
    seed: int
    tsu: float
    avg_delay: float
    energy: float


def config_for(config: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    if param == "euav-freq":
        return config.replace(network__euav_max_freq_hz=value * 1e9)
    if param == "task-density":
        return config.replace(tasks__intensity_cycles_per_bit=(float(value), float(value)))
    if param == "veh-density":
        return config.replace(mobility__vehicle_density_per_km2=float(value))
    raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")


def sweep(config: ScenarioConfig, param: str, grid: Sequence[float], policies: Sequence[str],
          seeds: Sequence[int], slots: int = None) -> list:
    """One run per (grid value, policy, seed); seeds are shared across policies.

    Grid units: GHz for ``euav-freq``, cycles/bit for ``task-density``
    (fixed intensity), vehicles/km^2 for ``veh-density``.
    """
    if not len(grid):
        raise ValueError("empty grid")
    config_for(config, param, grid[0])  # rejects unknown names early
    slots = slots or config.slots
    rows = []
    for seed in seeds:
        base = config.replace(seed=int(seed))
        if param == "euav-freq":
            res = run_policies(build_scenario(base), slots, policies, [g * 1e9 for g in grid])
            per_value = {g: {p: res[(p, g * 1e9)] for p in policies} for g in grid}
        else:
            per_value = {g: run_policies(build_scenario(config_for(base, param, g)), slots, policies)
                         for g in grid}
        for g in grid:
            for p in policies:
                r = per_value[g][p]
                rows.append(SweepRow(float(g), p, int(seed), r.time_avg_system_utility,
                                     r.avg_completion_delay_s, r.total_energy_j))
    rows.sort(key=lambda r: (r.seed, r.param_value, POLICIES.index(r.policy)))
    return rows
