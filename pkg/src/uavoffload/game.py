"""Task offloading game among C-UAVs.

Players are the task-bearing C-UAVs of one slot. Local and VFC utilities do
not depend on the other players (fog sets are disjoint); the MEC utility
does, through the E-UAV capacity split among all MEC players.

The better-response dynamics follow the E-UAV-coordinated loop: in every
round each player in turn tries MEC (with the capacity re-split over the
tentative MEC set) and keeps it only if that strictly beats its initial
local/VFC decision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import mec
from .cost import INFEASIBLE, ModeOutcome, mec_outcome
from .scenario import Mode, Task, UtilityParams

LOCAL, MEC, VEH = Mode.LOCAL, Mode.MEC, Mode.VEH
_NO_MEC = ModeOutcome(math.inf, 0.0, INFEASIBLE, False)


class GameError(RuntimeError):
    pass


@dataclass(frozen=True)
class Player:
    uav: int
    task: Task
    local: ModeOutcome
    rate_u2u: float
    veh: Optional[ModeOutcome] = None
    fog_set: tuple = ()
    division: tuple = ()

    def fixed_utility(self, mode: Mode) -> float:
        if mode is LOCAL:
            return self.local.utility
        if mode is VEH:
            return self.veh.utility if self.veh is not None else INFEASIBLE
        raise ValueError("MEC utility depends on the other players")


@dataclass
class GameContext:
    players: tuple
    max_freq_hz: float
    utility: UtilityParams
    tx_power_u2u_w: float
    allocator: str = "kkt"
    tol: float = 1e-22
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.players)

    def allocate(self, members) -> tuple:
        """MEC outcomes for every member of ``members`` (positions in ``players``).

        Returns ``(outcomes, allocation)``; cached per member set.
        """
        key = frozenset(members)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        up = self.utility
        ok = {i: (self.players[i].task, self.players[i].rate_u2u) for i in sorted(key)
              if mec.deadline_slack(self.players[i].task, self.players[i].rate_u2u, up) > 0}
        if self.allocator == "even":
            alloc = mec.even_allocate({i: None for i in sorted(key)}, self.max_freq_hz)
        else:
            try:
                alloc = mec.bisect_allocate(ok, self.max_freq_hz, up, tol=self.tol)
            except mec.MecInfeasible:
                alloc = mec.MecAllocation({}, math.inf, 0.0)
        outcomes = {}
        for i in key:
            share = alloc.shares_hz.get(i)
            if share is None:
                outcomes[i] = _NO_MEC
            else:
                p = self.players[i]
                outcomes[i] = mec_outcome(p.task, share, p.rate_u2u, self.tx_power_u2u_w, up)
        self._cache[key] = (outcomes, alloc)
        return outcomes, alloc


def mec_members(modes: Sequence[Mode]) -> tuple:
    return tuple(i for i, m in enumerate(modes) if m is MEC)


def player_utility(ctx: GameContext, modes: Sequence[Mode], n: int) -> float:
    if modes[n] is MEC:
        return ctx.allocate(mec_members(modes))[0][n].utility
    return ctx.players[n].fixed_utility(modes[n])


def system_utility(ctx: GameContext, modes: Sequence[Mode]) -> float:
    return sum(player_utility(ctx, modes, n) for n in range(len(ctx)))


def _local_term(p: Player) -> float:
    # infeasible local tasks count as drops (zero), which keeps the
    # deviator-independent part of the potential finite
    u = p.local.utility
    return u if u != INFEASIBLE else 0.0


def potential(ctx: GameContext, modes: Sequence[Mode], player: int) -> float:
    """Potential seen by a deviating ``player``.

    All-local welfare when the player computes locally; otherwise the
    player's own utility plus the local utilities of everyone else.
    """
    others = sum(_local_term(p) for j, p in enumerate(ctx.players) if j != player)
    if modes[player] is LOCAL:
        return others + ctx.players[player].local.utility
    return others + player_utility(ctx, modes, player)


# ---------------------------------------------------------------------------
# better-response dynamics


@dataclass(frozen=True)
class GameState:
    modes: tuple
    initial: tuple
    baseline: tuple
    iteration: int = 0
    converged: bool = False


@dataclass(frozen=True)
class Update:
    round: int
    player: int
    old: Mode
    new: Mode
    potential_before: float
    potential_after: float


@dataclass(frozen=True)
class GameResult:
    state: GameState
    rounds: int
    updates: tuple = ()

    @property
    def modes(self) -> tuple:
        return self.state.modes


def initial_state(ctx: GameContext, use_vfc: bool = True) -> GameState:
    """Each player's better of local and VFC (VFC only on strict improvement)."""
    modes, base = [], []
    for p in ctx.players:
        u_loc = p.local.utility
        u_veh = p.fixed_utility(VEH) if use_vfc else INFEASIBLE
        if u_veh > u_loc:
            modes.append(VEH)
            base.append(u_veh)
        else:
            modes.append(LOCAL)
            base.append(u_loc)
    return GameState(tuple(modes), tuple(modes), tuple(base))


def better_response_round(state: GameState, ctx: GameContext, log: list = None) -> GameState:
    modes = list(state.modes)
    changed = False
    for n in range(len(ctx)):
        trial = list(modes)
        trial[n] = MEC
        u_mec = ctx.allocate(mec_members(trial))[0][n].utility
        new = MEC if u_mec > state.baseline[n] else state.initial[n]
        if new is not modes[n]:
            if log is not None:
                after = list(modes)
                after[n] = new
                log.append(Update(state.iteration + 1, n, modes[n], new,
                                  potential(ctx, modes, n), potential(ctx, after, n)))
            modes[n] = new
            changed = True
    return replace(state, modes=tuple(modes), iteration=state.iteration + 1, converged=not changed)


def run_game(ctx: GameContext, state: GameState = None, max_rounds: int = None,
             trace: bool = False) -> GameResult:
    """Iterate rounds until a full round changes nobody's decision."""
    if state is None:
        state = initial_state(ctx)
    cap = max_rounds if max_rounds is not None else max(10 * len(ctx), 1)
    log = [] if trace else None
    if len(ctx) == 0:
        return GameResult(replace(state, converged=True), 0, ())
    while not state.converged:
        if state.iteration >= cap:
            raise GameError(f"no equilibrium after {cap} rounds")
        state = better_response_round(state, ctx, log)
    return GameResult(state, state.iteration, tuple(log or ()))


def certificate_violations(ctx: GameContext, state: GameState) -> list:
    """Players that would still switch under the explored deviations."""
    bad = []
    for n, m in enumerate(state.modes):
        trial = list(state.modes)
        trial[n] = MEC
        u_mec = ctx.allocate(mec_members(trial))[0][n].utility
        if m is MEC and not u_mec > state.baseline[n]:
            bad.append(n)
        if m is not MEC and u_mec > state.baseline[n]:
            bad.append(n)
    return bad


# ---------------------------------------------------------------------------
# price of anarchy


@dataclass(frozen=True)
class PoaResult:
    poa: float
    lower_bound: float
    optimum: float
    worst_equilibrium: float
    equilibria: tuple


def is_nash(ctx: GameContext, modes: Sequence[Mode], tol: float = 0.0) -> bool:
    for n in range(len(ctx)):
        u = player_utility(ctx, modes, n)
        for alt in (LOCAL, MEC, VEH):
            if alt is modes[n]:
                continue
            dev = list(modes)
            dev[n] = alt
            if player_utility(ctx, dev, n) > u + tol:
                return False
    return True


def best_mec_utility(ctx: GameContext, n: int) -> float:
    """Own MEC utility with the unconstrained optimal share capped at F_u_max."""
    p, up = ctx.players[n], ctx.utility
    c = mec.deadline_slack(p.task, p.rate_u2u, up)
    if c <= 0:
        return INFEASIBLE
    f = min(mec.closed_form_share(p.task, p.rate_u2u, 0.0, up), ctx.max_freq_hz)
    arg = c - p.task.cycles / f
    if arg <= 0:
        return INFEASIBLE
    tx = p.task.data_size_bits / p.rate_u2u
    return up.delay_weight * math.log(arg) - up.energy_weight * ctx.tx_power_u2u_w * tx - up.mec_price_per_hz * f


def poa_bound(ctx: GameContext) -> float:
    num = den = 0.0
    for n, p in enumerate(ctx.players):
        fixed = max(p.fixed_utility(LOCAL), p.fixed_utility(VEH))
        num += fixed
        den += max(fixed, best_mec_utility(ctx, n))
    return num / den


def poa_eval(ctx: GameContext, max_players: int = 4) -> PoaResult:
    """Exhaustive PoA over all 3^N profiles (small N only)."""
    if len(ctx) > max_players:
        raise ValueError(f"enumeration limited to {max_players} players")
    profiles = list(itertools.product((LOCAL, MEC, VEH), repeat=len(ctx)))
    welfare = {a: system_utility(ctx, a) for a in profiles}
    opt = max(welfare.values())
    if not (math.isfinite(opt) and opt > 0):
        raise ValueError("PoA needs a finite, positive optimal welfare")
    eq = tuple(a for a in profiles if is_nash(ctx, a))
    if not eq:
        raise GameError("no pure Nash equilibrium found")
    worst = min(welfare[a] for a in eq)
    return PoaResult(worst / opt, poa_bound(ctx), opt, worst, eq)
