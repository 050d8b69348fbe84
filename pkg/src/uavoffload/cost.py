"""Delay, energy and utility of the three execution modes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Task, UtilityParams

INFEASIBLE = -math.inf


@dataclass(frozen=True)
class ModeOutcome:
    delay_s: float
    energy_j: float
    utility: float
    feasible: bool


def revenue(delay_s: float, deadline_s: float, up: UtilityParams) -> float:
    arg = up.log_offset + deadline_s - delay_s
    return math.log(arg) if arg > 0 else INFEASIBLE


def utility(delay_s: float, energy_j: float, task: Task, up: UtilityParams, price: float = 0.0) -> float:
    """Weighted log-revenue minus energy and resource cost; -inf past the deadline."""
    if not delay_s <= task.deadline_s:
        return INFEASIBLE
    return up.delay_weight * revenue(delay_s, task.deadline_s, up) - up.energy_weight * energy_j - price


def _outcome(delay, energy, task, up, price=0.0) -> ModeOutcome:
    u = utility(delay, energy, task, up, price)
    return ModeOutcome(float(delay), float(energy), u, u != INFEASIBLE)


def local_outcome(task: Task, local_freq_hz: float, up: UtilityParams) -> ModeOutcome:
    if local_freq_hz <= 0:
        raise ValueError("local CPU frequency must be positive")
    delay = task.cycles / local_freq_hz
    energy = up.switched_capacitance * local_freq_hz ** 3 * delay
    return _outcome(delay, energy, task, up)


def mec_outcome(task: Task, freq_hz: float, rate_bps: float, tx_power_w: float,
                up: UtilityParams) -> ModeOutcome:
    if freq_hz <= 0 or rate_bps <= 0:
        return ModeOutcome(math.inf, 0.0, INFEASIBLE, False)
    tx = task.data_size_bits / rate_bps
    delay = tx + task.cycles / freq_hz
    return _outcome(delay, tx_power_w * tx, task, up, up.mec_price_per_hz * freq_hz)


def vfc_delay_energy(task: Task, division, rates, freqs, tx_power_w: float):
    lam = np.asarray(division, dtype=float)
    rates = np.asarray(rates, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    if not (len(lam) == len(rates) == len(freqs) >= 1):
        raise ValueError("division, rates and freqs must have the same non-zero length")
    tx = lam * task.data_size_bits / rates
    with np.errstate(divide="ignore", invalid="ignore"):
        exe = np.where(lam > 0, lam * task.cycles / freqs, 0.0)
    return float(np.max(tx + exe)), float(np.sum(tx_power_w * tx))


def vfc_outcome(task: Task, division, rates, freqs, tx_power_w: float, up: UtilityParams) -> ModeOutcome:
    delay, energy = vfc_delay_energy(task, division, rates, freqs, tx_power_w)
    return _outcome(delay, energy, task, up)
