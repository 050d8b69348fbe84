"""Optimal E-UAV frequency shares for the set of MEC offloaders.

Each offloader's utility is concave in its share, so the KKT conditions give
the share in closed form for a given multiplier on the capacity constraint;
the multiplier is found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .scenario import Task, UtilityParams

MAX_BISECTIONS = 200
MAX_DOUBLINGS = 200
VECTOR_MIN = 16  # member sets above this size are evaluated with numpy


class MecInfeasible(ValueError):
    """No positive-revenue allocation exists for the requested offloaders."""


class BisectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class MecAllocation:
    shares_hz: dict
    multiplier: float
    total_hz: float
    iterations: int = 0


def deadline_slack(task: Task, rate_bps: float, up: UtilityParams) -> float:
    """beta + T_max - D/R: what is left of the log argument after transmission."""
    return up.log_offset + task.deadline_s - task.data_size_bits / rate_bps


def _shares(cycles: np.ndarray, slack: np.ndarray, weight: float, price: float) -> np.ndarray:
    if price <= 0:
        return np.full(cycles.shape, math.inf)
    disc = cycles * cycles + 4.0 * slack * cycles * weight / price
    return (cycles + np.sqrt(disc)) / (2.0 * slack)


def closed_form_share(task: Task, rate_bps: float, multiplier: float, up: UtilityParams) -> float:
    c = deadline_slack(task, rate_bps, up)
    if c <= 0:
        raise MecInfeasible("transmission alone exhausts the deadline budget")
    out = _shares(np.array([task.cycles]), np.array([c]), up.delay_weight, up.mec_price_per_hz + multiplier)
    return float(out[0])


def bisect_allocate(offloaders: Mapping, max_freq_hz: float, up: UtilityParams,
                    tol: float = 1e-22, max_iter: int = MAX_BISECTIONS) -> MecAllocation:
    """Allocate ``max_freq_hz`` among ``offloaders`` ({id: (task, u2u_rate)}).

    ``tol`` is the stopping width of the multiplier bracket, in $/Hz.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if not offloaders:
        return MecAllocation({}, 0.0, 0.0)
    ids = list(offloaders)
    cycles = np.array([offloaders[i][0].cycles for i in ids], dtype=float)
    slack = np.array([deadline_slack(offloaders[i][0], offloaders[i][1], up) for i in ids])
    if np.any(slack <= 0):
        bad = [ids[k] for k in np.flatnonzero(slack <= 0)]
        raise MecInfeasible(f"offloaders {bad} cannot meet the log domain even with infinite CPU")
    if cycles.dot(1.0 / slack) >= max_freq_hz:
        # every share must exceed cycles/slack; the capacity cannot cover that floor
        raise MecInfeasible("capacity below the sum of log-domain floors")

    w, rho = up.delay_weight, up.mec_price_per_hz
    if len(ids) <= VECTOR_MIN:
        # plain floats: small member sets are dominated by numpy call overhead
        terms = [(a, a * a, 4.0 * c * a * w, 2.0 * c) for a, c in zip(cycles.tolist(), slack.tolist())]
        sqrt = math.sqrt

        def shares(gamma, cap=True) -> list:
            price = rho + gamma
            if price <= 0:
                return [math.inf if not cap else max_freq_hz] * len(terms)
            f = [(a + sqrt(a2 + b / price)) / c2 for a, a2, b, c2 in terms]
            return [x if x < max_freq_hz or not cap else max_freq_hz for x in f]

        def total(gamma) -> float:
            price = rho + gamma
            if price <= 0:
                return max_freq_hz * len(terms)
            s = 0.0
            for a, a2, b, c2 in terms:
                x = (a + sqrt(a2 + b / price)) / c2
                s += x if x < max_freq_hz else max_freq_hz
            return s
    else:
        a2, b, c2 = cycles * cycles, 4.0 * slack * cycles * w, 2.0 * slack

        def shares(gamma, cap=True) -> list:
            price = rho + gamma
            if price <= 0:
                return [math.inf if not cap else max_freq_hz] * len(ids)
            f = (cycles + np.sqrt(a2 + b / price)) / c2
            return (np.minimum(f, max_freq_hz) if cap else f).tolist()

        def total(gamma) -> float:
            return math.fsum(shares(gamma))

    # slack test on the unclamped optimum: a clamped share means the capacity binds
    f = shares(0.0, cap=False)
    if sum(f) <= max_freq_hz:
        return MecAllocation(dict(zip(ids, f)), 0.0, float(sum(f)))

    hi = 1.0
    for _ in range(MAX_DOUBLINGS):
        if total(hi) <= max_freq_hz:
            break
        hi *= 2.0
    else:
        raise BisectionError("could not bracket the multiplier")

    lo, it = 0.0, 0
    while hi - lo >= tol:
        if it >= max_iter:
            raise BisectionError(f"bisection did not reach width {tol} in {max_iter} steps")
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):  # bracket below float resolution
            break
        if total(mid) >= max_freq_hz:
            lo = mid
        else:
            hi = mid
        it += 1
    # the upper end of the bracket always respects the capacity
    f = shares(hi)
    return MecAllocation(dict(zip(ids, f)), hi, float(sum(f)), it)


def even_allocate(offloaders: Mapping, max_freq_hz: float) -> MecAllocation:
    if not offloaders:
        return MecAllocation({}, 0.0, 0.0)
    share = max_freq_hz / len(offloaders)
    return MecAllocation({i: share for i in offloaders}, 0.0, max_freq_hz)


def stationarity_residual(task: Task, rate_bps: float, share_hz: float, multiplier: float,
                          up: UtilityParams) -> float:
    """Relative gap in the first-order condition d(utility)/dF = multiplier."""
    c = deadline_slack(task, rate_bps, up)
    marginal = up.delay_weight * task.cycles / (share_hz ** 2 * (c - task.cycles / share_hz))
    target = up.mec_price_per_hz + multiplier
    return abs(marginal - target) / target


def allocation_objective(offloaders: Mapping, shares: Mapping, tx_power_w: float, up: UtilityParams) -> float:
    """Sum of MEC utilities ignoring the deadline cut (the P1 objective)."""
    total = 0.0
    for i, (task, rate) in offloaders.items():
        f = shares[i]
        tx = task.data_size_bits / rate
        arg = up.log_offset + task.deadline_s - tx - task.cycles / f
        if arg <= 0:
            return -math.inf
        total += up.delay_weight * math.log(arg) - up.energy_weight * tx_power_w * tx - up.mec_price_per_hz * f
    return total
