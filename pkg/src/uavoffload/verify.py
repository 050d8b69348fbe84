"""Independent oracles for the allocation, division, game and PoA solvers.

Each check draws random instances from the default parameter ranges, solves them
with the package's solver and compares against a second route that shares
as little code as possible with the first (scipy / brute force / grids).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import channel, cost, game, mec, vfc
from .scenario import ScenarioConfig, Task, stream
from .scenario import Mode

SUITES = ("mec", "vfc", "game", "poa")


@dataclass
class Check:
    name: str
    tolerance: float
    max_error: float = 0.0
    trials: int = 0
    failures: list = field(default_factory=list)  # (trial seed, error)

    def record(self, seed: int, error: float) -> None:
        self.trials += 1
        if math.isnan(error) or error > self.max_error:
            self.max_error = error
        if not error <= self.tolerance:
            self.failures.append((seed, error))

    @property
    def passed(self) -> bool:
        return self.trials > 0 and not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{status}  {self.name}: {self.trials} trials, max error {self.max_error:.3e} (tol {self.tolerance:g})"
        if self.failures:
            seeds = ", ".join(str(s) for s, _ in self.failures[:10])
            msg += f"; failing seeds: {seeds}"
        return msg


# ---------------------------------------------------------------------------
# instance generators


def random_task(cfg: ScenarioConfig, rng) -> Task:
    r = cfg.tasks
    return Task(rng.uniform(*r.data_size_bits), rng.uniform(*r.intensity_cycles_per_bit),
                rng.uniform(*r.deadline_s))


def random_u2u_rate(cfg: ScenarioConfig, rng) -> float:
    net = cfg.network
    half = net.area_side_m / 2
    pos = (rng.uniform(-half, half), rng.uniform(-half, half), net.cuav_altitude_m)
    euav = (net.euav_xy_m[0], net.euav_xy_m[1], net.euav_altitude_m)
    return channel.u2u_rate(pos, euav, net.subchannels, cfg.channel)


def random_offloaders(cfg: ScenarioConfig, rng, n: int) -> dict:
    """``n`` MEC offloaders whose transmission leaves a positive log slack."""
    out = {}
    while len(out) < n:
        task, rate = random_task(cfg, rng), random_u2u_rate(cfg, rng)
        if mec.deadline_slack(task, rate, cfg.utility) > 0:
            out[len(out)] = (task, rate)
    return out


def random_candidates(cfg: ScenarioConfig, rng, n: int) -> list:
    """In-range vehicles around a C-UAV at the origin, all with idle CPU."""
    net, ch = cfg.network, cfg.channel
    radius = channel.footprint_radius(net.cuav_altitude_m, ch.beamwidth_half_rad)
    out = []
    for v in range(n):
        r, phi = radius * math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        rate = channel.u2v_rate((0.0, 0.0, net.cuav_altitude_m), (r * math.cos(phi), r * math.sin(phi), 0.0), ch)
        lo, hi = net.vehicle_freq_range_hz
        out.append(vfc.Candidate(v, rate, rng.uniform(max(lo, 0.05 * hi), hi)))
    return out


def random_player(cfg: ScenarioConfig, rng, uav: int, k: int = None) -> game.Player:
    """Player with local/VFC outcomes from scratch (even split over random vehicles)."""
    up = cfg.utility
    task = random_task(cfg, rng)
    local = cost.local_outcome(task, rng.uniform(*cfg.network.cuav_freq_range_hz), up)
    k = k or int(rng.integers(1, cfg.network.subchannels + 1))
    cands = random_candidates(cfg, rng, k)
    lam = tuple([1.0 / k] * k)
    veh = cost.vfc_outcome(task, lam, [c.rate_bps for c in cands], [c.freq_hz for c in cands],
                           cfg.channel.tx_power_u2v_w, up)
    return game.Player(uav, task, local, random_u2u_rate(cfg, rng), veh,
                       tuple(c.vehicle for c in cands), lam)


def random_context(cfg: ScenarioConfig, rng, n: int, max_freq_hz: float = None) -> game.GameContext:
    players = tuple(random_player(cfg, rng, i) for i in range(n))
    fmax = max_freq_hz if max_freq_hz is not None else cfg.network.euav_max_freq_hz
    return game.GameContext(players, fmax, cfg.utility, cfg.channel.tx_power_u2u_w,
                            tol=cfg.network.bisection_tol)


# ---------------------------------------------------------------------------
# mec


def _mec_objective_ghz(x, arrs, up, power):
    cycles, slack, tx = arrs
    f = np.asarray(x) * 1e9
    arg = slack - cycles / f
    if np.any(arg <= 0):
        return -1e6
    return float(np.sum(up.delay_weight * np.log(arg) - up.energy_weight * power * tx
                        - up.mec_price_per_hz * f))


def mec_oracle(offloaders: dict, max_freq_hz: float, up, power: float) -> np.ndarray:
    """Numerical maximiser of the allocation objective (SLSQP in GHz, multi-start)."""
    ids = list(offloaders)
    cycles = np.array([offloaders[i][0].cycles for i in ids])
    tx = np.array([offloaders[i][0].data_size_bits / offloaders[i][1] for i in ids])
    dl = np.array([offloaders[i][0].deadline_s for i in ids])
    slack = up.log_offset + dl - tx
    arrs = (cycles, slack, tx)
    floor = cycles / slack / 1e9
    cap = max_freq_hz / 1e9
    fun = lambda x: -_mec_objective_ghz(x, arrs, up, power)  # noqa: E731
    cons = [{"type": "ineq", "fun": lambda x: cap - np.sum(x)}]
    bounds = [(lo * (1 + 1e-9), cap) for lo in floor]
    best = None
    spare = cap - floor.sum()
    starts = [floor + spare * w for w in (np.full(len(ids), 1 / len(ids)), cycles / cycles.sum(),
                                          np.sqrt(cycles) / np.sqrt(cycles).sum())]
    for x0 in starts:
        res = minimize(fun, 0.999 * x0 + 0.001 * floor, method="SLSQP", bounds=bounds,
                       constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
        if best is None or res.fun < best.fun:
            best = res
    return best.x * 1e9


def multiplier_grid_oracle(offloaders: dict, max_freq_hz: float, up) -> float:
    """Multiplier located on a log grid over [1e-20, 1] and refined by halving."""
    ids = list(offloaders)

    def total(gamma):
        s = 0.0
        for i in ids:
            task, rate = offloaders[i]
            c = up.log_offset + task.deadline_s - task.data_size_bits / rate
            a = task.cycles
            s += (a + math.sqrt(a * a + 4 * c * a * up.delay_weight / (up.mec_price_per_hz + gamma))) / (2 * c)
        return s

    # unclamped totals: at the optimum no share exceeds the capacity
    if total(0.0) <= max_freq_hz:
        return 0.0
    grid = np.logspace(-20, 0, 2001)
    hi = next(g for g in grid if total(g) <= max_freq_hz)
    lo = grid[max(0, np.searchsorted(grid, hi) - 1)]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        lo, hi = (mid, hi) if total(mid) > max_freq_hz else (lo, mid)
    return hi


def check_mec(cfg: ScenarioConfig, trials: int, seed: int = 0) -> list:
    up = cfg.utility
    power = cfg.channel.tx_power_u2u_w
    stat = Check("mec stationarity (relative)", 1e-6)
    slack_c = Check("mec complementary slackness (relative)", 1e-6)
    cap = Check("mec capacity respected (relative excess)", 1e-12)
    obj = Check("mec objective vs SLSQP oracle (shortfall)", 1e-6)
    share = Check("mec shares vs SLSQP oracle (/F_max)", 1e-4)
    mult = Check("mec multiplier vs grid oracle (relative)", 1e-6)
    for t in range(trials):
        rng = stream(seed, "verify-mec", t)
        n = int(rng.integers(1, 6))
        offl = random_offloaders(cfg, rng, n)
        floor = sum(task.cycles / mec.deadline_slack(task, r, up) for task, r in offl.values())
        fmax = float(rng.uniform(1.05 * floor, max(1.1 * floor, 50e9)))
        alloc = mec.bisect_allocate(offl, fmax, up, tol=cfg.network.bisection_tol)
        g = alloc.multiplier
        res = max(mec.stationarity_residual(task, r, alloc.shares_hz[i], g, up)
                  for i, (task, r) in offl.items())
        stat.record(t, res)
        slack_c.record(t, g * abs(fmax - alloc.total_hz) / ((up.mec_price_per_hz + g) * fmax))
        cap.record(t, max(0.0, alloc.total_hz - fmax) / fmax)
        x = mec_oracle(offl, fmax, up, power)
        ours = mec.allocation_objective(offl, alloc.shares_hz, power, up)
        theirs = mec.allocation_objective(offl, dict(enumerate(x)), power, up)
        obj.record(t, max(0.0, theirs - ours))
        share.record(t, max(abs(alloc.shares_hz[i] - x[i]) for i in offl) / fmax)
        gg = multiplier_grid_oracle(offl, fmax, up)
        mult.record(t, abs(gg - g) / max(gg, up.mec_price_per_hz))
    return [stat, slack_c, cap, obj, share, mult]


# ---------------------------------------------------------------------------
# vfc


def equalized_delay(task: Task, subset) -> float:
    """Smallest max-term delay over divisions: lambda_j proportional to 1/Pr_j."""
    pr = [task.data_size_bits / c.rate_bps + task.cycles / c.freq_hz for c in subset]
    return 1.0 / sum(1.0 / p for p in pr)


def division_value(task: Task, lam, rates, freqs, power, up) -> float:
    """Division objective written out independently of the GA fitness."""
    delay = max(l_ * (task.data_size_bits / r + task.cycles / f) for l_, r, f in zip(lam, rates, freqs))
    energy = sum(power * l_ * task.data_size_bits / r for l_, r in zip(lam, rates))
    arg = up.log_offset + task.deadline_s - delay
    if arg <= 0:
        return -math.inf
    return up.delay_weight * math.log(arg) - up.energy_weight * energy


def simplex_grid_oracle(task, rates, freqs, power, up, step: float = 0.01) -> tuple:
    k = len(rates)
    n = int(round(1 / step))
    best, best_lam = -math.inf, None
    for parts in itertools.product(range(n + 1), repeat=k - 1):
        if sum(parts) > n:
            continue
        lam = [p / n for p in parts] + [(n - sum(parts)) / n]
        v = division_value(task, lam, rates, freqs, power, up)
        if v > best:
            best, best_lam = v, lam
    if best_lam is None:
        return -math.inf, None
    # local polish on the simplex through a softmax parametrisation
    z0 = np.log(np.maximum(best_lam, 1e-9))

    def neg(z):
        w = np.exp(z - z.max())
        return -division_value(task, w / w.sum(), rates, freqs, power, up)

    res = minimize(neg, z0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    if -res.fun > best:
        w = np.exp(res.x - res.x.max())
        best, best_lam = -res.fun, list(w / w.sum())
    return best, best_lam


def check_vfc(cfg: ScenarioConfig, trials: int, seed: int = 0) -> list:
    up = cfg.utility
    power = cfg.channel.tx_power_u2v_w
    dom = Check("fog selection: top-3 preference vs all C(8,3) subsets (relative excess delay)", 1e-12)
    ga_q = Check("GA objective vs simplex-grid oracle (relative shortfall)", 0.02)
    simplex = Check("GA simplex constraint every generation (max |sum-1|, min gene<0)", 1e-12)
    mono = Check("GA best-ever fitness non-decreasing (max drop)", 0.0)
    for t in range(trials):
        rng = stream(seed, "verify-vfc", t)
        task = random_task(cfg, rng)
        cands = random_candidates(cfg, rng, int(rng.integers(4, 9)))
        chosen = vfc.select_fog_nodes(task, cands, 3)
        best = min(equalized_delay(task, s) for s in itertools.combinations(cands, 3))
        dom.record(t, max(0.0, equalized_delay(task, chosen) - best) / best)

        while True:  # only instances with a feasible division say anything about quality
            k = int(rng.integers(2, 4))
            sub = random_candidates(cfg, rng, k)
            prob = vfc.DivisionProblem(task, tuple(c.rate_bps for c in sub), tuple(c.freq_hz for c in sub), power)
            oracle, _ = simplex_grid_oracle(task, prob.rates, prob.freqs, power, up)
            if math.isfinite(oracle):
                break
            task = random_task(cfg, rng)
        worst = [0.0]

        def cb(gen, pop, fit):
            worst[0] = max(worst[0], float(np.max(np.abs(pop.sum(axis=2) - 1.0))),
                           float(max(0.0, -pop.min())))

        res = vfc.ga_divide(prob, cfg.ga, up, stream(seed, "verify-ga", t), cb)
        simplex.record(t, worst[0])
        h = np.asarray(res.best_history)
        with np.errstate(invalid="ignore"):
            drops = np.where(np.isneginf(h[:-1]), 0.0, h[:-1] - h[1:])
        mono.record(t, float(max(0.0, drops.max())) if len(h) > 1 else 0.0)
        ours = division_value(task, res.division, prob.rates, prob.freqs, power, up)
        ga_q.record(t, max(0.0, oracle - ours) / abs(oracle))
    return [dom, ga_q, simplex, mono]


# ---------------------------------------------------------------------------
# game


def direct_utility(ctx: game.GameContext, modes, n: int) -> float:
    """Player utility recomputed without the context's cache or helpers."""
    p = ctx.players[n]
    up = ctx.utility
    if modes[n] is Mode.LOCAL:
        return p.local.utility
    if modes[n] is Mode.VEH:
        return p.veh.utility if p.veh is not None else -math.inf
    members = [j for j, m in enumerate(modes) if m is Mode.MEC]
    ok = {j: (ctx.players[j].task, ctx.players[j].rate_u2u) for j in members
          if up.log_offset + ctx.players[j].task.deadline_s
          - ctx.players[j].task.data_size_bits / ctx.players[j].rate_u2u > 0}
    if n not in ok:
        return -math.inf
    try:
        alloc = mec.bisect_allocate(ok, ctx.max_freq_hz, up, tol=ctx.tol)
    except mec.MecInfeasible:
        return -math.inf
    f = alloc.shares_hz[n]
    task, rate = ok[n]
    delay = task.data_size_bits / rate + task.cycles / f
    if delay > task.deadline_s:
        return -math.inf
    energy = ctx.tx_power_u2u_w * task.data_size_bits / rate
    return (up.delay_weight * math.log(up.log_offset + task.deadline_s - delay)
            - up.energy_weight * energy - up.mec_price_per_hz * f)


def potential_residuals(ctx: game.GameContext) -> float:
    """Worst |dU_n - dF| over every profile and unilateral deviation."""
    worst = 0.0
    modes3 = (Mode.LOCAL, Mode.MEC, Mode.VEH)
    for prof in itertools.product(modes3, repeat=len(ctx)):
        for n in range(len(ctx)):
            for alt in modes3:
                if alt is prof[n]:
                    continue
                dev = list(prof)
                dev[n] = alt
                u0, u1 = direct_utility(ctx, prof, n), direct_utility(ctx, dev, n)
                f0, f1 = game.potential(ctx, prof, n), game.potential(ctx, dev, n)
                if not (math.isfinite(u0) and math.isfinite(u1)):
                    # both routes must agree on which profiles are infeasible
                    if (math.isfinite(u0), math.isfinite(u1)) != (math.isfinite(f0), math.isfinite(f1)):
                        return math.inf
                    continue
                du = u1 - u0
                worst = max(worst, abs(du - (f1 - f0)))
    return worst


def dropped_tie(u: game.Update) -> bool:
    """A revert between two options that are both infeasible (task dropped either way)."""
    return u.potential_before == -math.inf and u.potential_after == -math.inf


def convergence_run(cfg: ScenarioConfig, n: int, seed: int) -> dict:
    rng = stream(seed, "verify-game", n)
    ctx = random_context(cfg, rng, n)
    res = game.run_game(ctx, trace=True)
    ties = [u for u in res.updates if dropped_tie(u)]
    bad = [u for u in res.updates if not dropped_tie(u) and not u.potential_after > u.potential_before]
    return dict(rounds=res.rounds, cap=10 * n, non_increasing=len(bad), dropped_ties=len(ties),
                updates=len(res.updates), violations=len(game.certificate_violations(ctx, res.state)))


def check_game(cfg: ScenarioConfig, trials: int, seed: int = 0) -> list:
    pot = Check("exact potential identity |dU_n - dF| (3 players, 27 profiles)", 1e-9)
    conv = Check("better-response convergence within the round cap (runs over cap)", 0.0)
    incr = Check("potential strictly increases at every update (non-increasing updates)", 0.0)
    cert = Check("explored-deviation Nash certificate (violations)", 0.0)
    ties = 0
    for t in range(trials):
        rng = stream(seed, "verify-potential", t)
        fmax = float(rng.uniform(5e9, 40e9))
        pot.record(t, potential_residuals(random_context(cfg, rng, 3, fmax)))
        for n in (5, 10, 15, 20):
            try:
                r = convergence_run(cfg, n, seed * 100003 + t)
            except game.GameError:
                conv.record(t, 1.0)
                continue
            conv.record(t, 0.0 if r["rounds"] <= r["cap"] else 1.0)
            incr.record(t, float(r["non_increasing"]))
            cert.record(t, float(r["violations"]))
            ties += r["dropped_ties"]
    incr.name += f"; {ties} reverts between two dropped options excluded"
    return [pot, conv, incr, cert]


# ---------------------------------------------------------------------------
# poa


def check_poa(cfg: ScenarioConfig, trials: int, seed: int = 0) -> list:
    bounds = Check("PoA lower bound <= PoA <= 1 (violation)", 1e-12)
    found = Check("pure Nash equilibrium exists (missing)", 0.0)
    t = k = 0
    while t < trials:
        rng = stream(seed, "verify-poa", k)
        k += 1
        fmax = float(rng.uniform(5e9, 40e9))
        ctx = random_context(cfg, rng, 3, fmax)
        try:
            r = game.poa_eval(ctx)
        except ValueError:
            continue  # optimum not positive: the ratio is undefined
        except game.GameError:
            found.record(k - 1, 1.0)
            t += 1
            continue
        found.record(k - 1, 0.0)
        bounds.record(k - 1, max(0.0, r.lower_bound - r.poa, r.poa - 1.0))
        t += 1
    return [bounds, found]


CHECKS: dict = {"mec": check_mec, "vfc": check_vfc, "game": check_game, "poa": check_poa}


def run_suite(cfg: ScenarioConfig, suite: str, trials: int, seed: int = 0,
              out: Callable[[str], None] = print) -> bool:
    names = SUITES if suite == "all" else (suite,)
    ok = True
    for s in names:
        if s not in CHECKS:
            raise ValueError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")
        for c in CHECKS[s](cfg, trials, seed):
            out(c.line())
            ok &= c.passed
    return ok
