"""Vehicle fog node selection and GA-based task division.

A C-UAV splits its task over at most K_n in-range vehicles. Vehicles are
ranked by the time each would need to take the whole task alone; the K_n
fastest form the fog set. The split itself is searched with a real-coded
GA whose individuals are renormalised onto the simplex after every
operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .scenario import GaParams, Task, UtilityParams


class NoFogNodes(ValueError):
    """No usable vehicle is in range; VFC is unavailable this slot."""


@dataclass(frozen=True)
class Preference:
    vehicle: int
    value: float


@dataclass(frozen=True)
class Candidate:
    vehicle: int
    rate_bps: float
    freq_hz: float


@dataclass(frozen=True)
class DivisionProblem:
    task: Task
    rates: tuple
    freqs: tuple
    tx_power_w: float


@dataclass(frozen=True)
class DivisionResult:
    division: tuple
    objective: float
    best_history: tuple = ()


def preference(task: Task, rate_bps: float, freq_hz: float) -> float:
    """Seconds to ship and run the whole task on one vehicle."""
    if rate_bps <= 0:
        raise ValueError("rate must be positive")
    if freq_hz <= 0:
        return math.inf
    return task.data_size_bits / rate_bps + task.cycles / freq_hz


def select_fog_nodes(task: Task, candidates: Sequence[Candidate], k: int) -> tuple:
    """Up to ``k`` candidates with the smallest preference value (ties: lower id).

    Vehicles with no idle CPU can never take a share and are skipped.
    """
    usable = [c for c in candidates if c.freq_hz > 0]
    if not usable:
        raise NoFogNodes("no usable vehicle in range")
    if len(usable) <= k:
        return tuple(usable)
    ranked = sorted(usable, key=lambda c: (preference(task, c.rate_bps, c.freq_hz), c.vehicle))
    return tuple(ranked[:k])


def normalize(genes, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    g = np.asarray(genes, dtype=float)
    if np.any(g < 0):
        raise ValueError("genes must be nonnegative")
    s = g.sum()
    if s > 0:
        return g / s
    if rng is None:
        raise ValueError("all-zero gene vector; pass rng to resample")
    return normalize(rng.random(g.shape), rng)


def division_objective(problem: DivisionProblem, division, up: UtilityParams) -> float:
    """Task-division objective for one split; -inf once the log argument is nonpositive."""
    fit = _fitness_batch(_problem_arrays([problem]), np.asarray(division, dtype=float)[None, :, None], up)
    return float(fit[0, 0])


# ---------------------------------------------------------------------------
# GA


def _problem_arrays(problems: Sequence[DivisionProblem]):
    kmax = max(len(p.rates) for p in problems)
    n = len(problems)
    tx_per_share = np.zeros((n, kmax))   # D / R_j
    pref = np.zeros((n, kmax))           # D / R_j + eta D / f_j
    mask = np.zeros((n, kmax), dtype=bool)
    deadline = np.empty(n)
    power = np.empty(n)
    for i, p in enumerate(problems):
        k = len(p.rates)
        r = np.asarray(p.rates, dtype=float)
        f = np.asarray(p.freqs, dtype=float)
        tx_per_share[i, :k] = p.task.data_size_bits / r
        with np.errstate(divide="ignore"):
            pref[i, :k] = tx_per_share[i, :k] + p.task.cycles / f
        mask[i, :k] = True
        deadline[i] = p.task.deadline_s
        power[i] = p.tx_power_w
    return tx_per_share, pref, mask, deadline, power


def _fitness_batch(arrays, pop: np.ndarray, up: UtilityParams) -> np.ndarray:
    """pop has shape (problems, K, L); returns (problems, L).

    Padded genes are zero and padded preferences are zero, so they add
    nothing to either the max or the sum.
    """
    tx_per_share, pref, _, deadline, power = arrays
    delay = (pop * pref[:, :, None]).max(axis=1)
    energy = power[:, None] * np.einsum("pkl,pk->pl", pop, tx_per_share)
    arg = up.log_offset + deadline[:, None] - delay
    ok = arg > 0
    rev = np.log(np.where(ok, arg, 1.0))
    rev[~ok] = -np.inf
    return up.delay_weight * rev - up.energy_weight * energy


def _draws(rng: np.random.Generator, g: GaParams, k: int, out: dict, n: int) -> None:
    """Draw every random number one GA run needs into row ``n`` of the stacked arrays.

    Gene axes are stored before the individual axis; padded genes stay zero.
    """
    L, G = g.population, g.generations
    out["init"][n, :k] = rng.random((L, k)).T
    out["tour"][n] = rng.integers(0, L, size=(G, L, 2))
    out["cross"][n] = rng.random((G, L // 2))
    out["tau"][n] = rng.random((G, L // 2))
    hit = rng.random((G, L, k)) < g.mutation_prob
    # replacement genes are drawn only where a mutation happens
    resample = np.zeros((G, L, k))
    resample[hit] = rng.random(int(hit.sum()))
    out["hit"][n, :, :k] = np.swapaxes(hit, 1, 2)
    out["resample"][n, :, :k] = np.swapaxes(resample, 1, 2)


def ga_divide_many(problems: Sequence[DivisionProblem], g: GaParams, up: UtilityParams,
                   rngs: Sequence[np.random.Generator],
                   callback: Callable = None) -> list:
    """Run one GA per problem, vectorised across problems.

    Each problem consumes only its own generator, so results are identical
    to running :func:`ga_divide` on the problems one by one.
    ``callback(generation, population, fitness)`` sees the (problems, L, K)
    population after normalisation and elite re-insertion.
    """
    if not problems:
        return []
    results: list = [None] * len(problems)
    idx = []
    for i, p in enumerate(problems):
        if len(p.rates) < 1:
            raise NoFogNodes("empty fog set")
        if len(p.rates) == 1:
            results[i] = DivisionResult((1.0,), division_objective(p, [1.0], up), ())
        else:
            idx.append(i)
    if not idx:
        return results

    probs = [problems[i] for i in idx]
    arrays = _problem_arrays(probs)
    mask = arrays[2]
    kmax = mask.shape[1]
    P, L, G = len(probs), g.population, g.generations
    pairs = L // 2
    d = dict(init=np.zeros((P, kmax, L)), tour=np.empty((P, G, L, 2), dtype=np.int64),
             cross=np.empty((P, G, pairs)), tau=np.empty((P, G, pairs)),
             hit=np.zeros((P, G, kmax, L), dtype=bool), resample=np.zeros((P, G, kmax, L)))
    for n, i in enumerate(idx):
        _draws(rngs[i], g, len(problems[i].rates), d, n)
    tour, cross, tau, hits, resample = d["tour"], d["cross"], d["tau"], d["hit"], d["resample"]

    rows = np.arange(P)
    fit_base = (rows * L)[:, None]
    gene_base = (rows[:, None, None] * kmax + np.arange(kmax)[None, :, None]) * L
    maskf = mask[:, :, None].astype(float)

    pop = d["init"]
    pop /= pop.sum(axis=1, keepdims=True)
    fit = _fitness_batch(arrays, pop, up)
    best_fit = np.full(P, -np.inf)
    best = pop[:, :, 0].copy()
    history = []

    def track(pop, fit):
        j = np.argmax(fit, axis=1)
        f = fit[rows, j]
        better = f > best_fit
        best_fit[better] = f[better]
        best[better] = pop[rows, :, j][better]
        history.append(best_fit.copy())
        return j

    for gen in range(G):
        elite_idx = track(pop, fit)
        elite = pop[rows, :, elite_idx]
        elite_fit = fit[rows, elite_idx]

        # 2-tournament; the lower index wins exact ties
        a, b = tour[:, gen, :, 0], tour[:, gen, :, 1]
        flat = fit.ravel()
        fa, fb = flat.take(fit_base + a), flat.take(fit_base + b)
        winner = np.where((fb > fa) | ((fb == fa) & (b < a)), b, a)
        children = pop.ravel().take(gene_base + winner[:, None, :])

        # arithmetic crossover, one tau per pair shared by both children;
        # pairs that skip crossover use tau = 1 (children copy parents)
        p1, p2 = children[:, :, 0:2 * pairs:2], children[:, :, 1:2 * pairs:2]
        t = np.where(cross[:, gen, :] < g.crossover_prob, tau[:, gen, :], 1.0)[:, None, :]
        td = t * (p1 - p2)
        c1, c2 = p2 + td, p1 - td
        children[:, :, 0:2 * pairs:2] = c1
        children[:, :, 1:2 * pairs:2] = c2

        # per-gene uniform resample (padded genes stay zero on both sides)
        np.copyto(children, resample[:, gen], where=hits[:, gen])
        sums = children.sum(axis=1, keepdims=True)
        if not np.all(sums > 0):  # degenerate rows restart uniform
            children = np.where(sums > 0, children, maskf)
            sums = children.sum(axis=1, keepdims=True)
        pop = children / sums
        fit = _fitness_batch(arrays, pop, up)

        worst = np.argmin(fit, axis=1)
        pop[rows, :, worst] = elite
        fit[rows, worst] = elite_fit
        if callback is not None:
            callback(gen, np.swapaxes(pop, 1, 2), fit)

    track(pop, fit)
    hist = np.array(history)  # (G+1, P)
    for n, i in enumerate(idx):
        k = len(problems[i].rates)
        results[i] = DivisionResult(tuple(best[n, :k].tolist()), float(best_fit[n]),
                                    tuple(hist[:, n].tolist()))
    return results


def ga_divide(problem: DivisionProblem, g: GaParams, up: UtilityParams,
              rng: np.random.Generator, callback: Callable = None) -> DivisionResult:
    return ga_divide_many([problem], g, up, [rng], callback)[0]
