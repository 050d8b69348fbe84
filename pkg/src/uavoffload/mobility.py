"""Vehicle placement (homogeneous PPP), Gauss-Markov vehicle kinematics and
circular C-UAV orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .scenario import CUavState, MobilityParams, NetworkParams, TaskRanges, VehicleState


@dataclass(frozen=True)
class Fleet:
    """Array form of a vehicle population; row i is vehicle id i."""

    x: np.ndarray
    y: np.ndarray
    speed: np.ndarray
    heading: np.ndarray
    idle_freq: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    def vehicle(self, i: int) -> VehicleState:
        return VehicleState((float(self.x[i]), float(self.y[i]), 0.0), float(self.speed[i]),
                            float(self.heading[i]), float(self.idle_freq[i]))

    def states(self) -> list:
        return [self.vehicle(i) for i in range(len(self))]

    @classmethod
    def from_states(cls, vehicles) -> "Fleet":
        arr = lambda f: np.array([f(v) for v in vehicles], dtype=float)  # noqa: E731
        return cls(arr(lambda v: v.position_m[0]), arr(lambda v: v.position_m[1]),
                   arr(lambda v: v.speed_mps), arr(lambda v: v.heading_rad),
                   arr(lambda v: v.idle_freq_hz))


def place_fleet(area_side_m: float, density_per_km2: float, rng: np.random.Generator,
                params: MobilityParams = MobilityParams(),
                freq_range_hz: tuple = (0.0, 1e9)) -> Fleet:
    if density_per_km2 <= 0 or area_side_m <= 0:
        raise ValueError("density and area must be positive")
    area_km2 = (area_side_m / 1000.0) ** 2
    m = int(rng.poisson(density_per_km2 * area_km2))
    half = area_side_m / 2.0
    xy = rng.uniform(-half, half, size=(2, m))
    speed = rng.uniform(*params.speed_bounds, size=m)
    heading = rng.uniform(*params.heading_bounds, size=m)
    freq = rng.uniform(*freq_range_hz, size=m)
    return Fleet(xy[0], xy[1], speed, heading, freq)


def place_vehicles(area_side_m: float, density_per_km2: float, rng: np.random.Generator,
                   params: MobilityParams = MobilityParams(),
                   freq_range_hz: tuple = (0.0, 1e9)) -> list:
    """Drop vehicles on a square of side ``area_side_m`` centred on the origin."""
    return place_fleet(area_side_m, density_per_km2, rng, params, freq_range_hz).states()


def _gauss_markov(value, alpha, mean, std, noise):
    return alpha * value + (1.0 - alpha) * mean + math.sqrt(max(0.0, 1.0 - alpha * alpha)) * std * noise


def _wrap(coord, area_side_m):
    half = area_side_m / 2.0
    return np.mod(coord + half, area_side_m) - half


def step_fleet(fleet: Fleet, params: MobilityParams, rng: np.random.Generator,
               area_side_m: float = None, clamp: bool = True) -> Fleet:
    """Advance every vehicle by one slot.

    The position update uses the pre-update speed and heading (explicit Euler).
    Vehicles leaving the square re-enter on the opposite side.
    """
    noise = rng.standard_normal((2, len(fleet)))
    a = params.memory_degree
    speed = _gauss_markov(fleet.speed, a, params.mean_speed_mps, params.speed_std, noise[0])
    heading = _gauss_markov(fleet.heading, a, params.mean_heading_rad, params.heading_std, noise[1])
    if clamp:
        speed = np.clip(speed, *params.speed_bounds)
        heading = np.clip(heading, *params.heading_bounds)
    dt = params.slot_duration_s
    x = fleet.x + fleet.speed * np.cos(fleet.heading) * dt
    y = fleet.y + fleet.speed * np.sin(fleet.heading) * dt
    if area_side_m is not None:
        x, y = _wrap(x, area_side_m), _wrap(y, area_side_m)
    return Fleet(x, y, speed, heading, fleet.idle_freq)


def step_vehicle(v: VehicleState, p: MobilityParams, rng: np.random.Generator,
                 area_side_m: float = None) -> VehicleState:
    """Single-vehicle form of :func:`step_fleet` (same draws, same arithmetic)."""
    out = step_fleet(Fleet.from_states([v]), p, rng, area_side_m)
    return out.vehicle(0)


def refresh_idle_freq(fleet: Fleet, rng: np.random.Generator, freq_range_hz: tuple) -> Fleet:
    return replace(fleet, idle_freq=rng.uniform(*freq_range_hz, size=len(fleet)))


# ---------------------------------------------------------------------------
# C-UAVs


def cell_centers(net: NetworkParams) -> np.ndarray:
    n = net.cells_per_side
    half = net.area_side_m / 2.0
    offsets = -half + net.grid_side_m * (np.arange(n) + 0.5)
    gx, gy = np.meshgrid(offsets, offsets, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def place_cuavs(net: NetworkParams, tasks: TaskRanges, rng: np.random.Generator) -> list:
    """Assign each C-UAV its own grid cell (random, without replacement)."""
    centers = cell_centers(net)
    picks = rng.permutation(len(centers))[: net.n_cuavs]
    phases = rng.uniform(0.0, 2 * math.pi, size=net.n_cuavs)
    freqs = rng.uniform(*net.cuav_freq_range_hz, size=net.n_cuavs)
    probs = rng.uniform(*tasks.task_prob, size=net.n_cuavs)
    cuavs = []
    for i, cell in enumerate(picks):
        c = CUavState(
            position_m=(0.0, 0.0, net.cuav_altitude_m), speed_mps=net.cuav_speed_mps,
            heading_rad=0.0, task_prob=float(probs[i]), local_freq_hz=float(freqs[i]),
            subchannels=net.subchannels,
            orbit_center_m=(float(centers[cell, 0]), float(centers[cell, 1])),
            orbit_phase_rad=float(phases[i]),
        )
        cuavs.append(step_cuav(c, 0, net.orbit_radius_m, 1.0))
    return cuavs


def step_cuav(c: CUavState, t: float, radius_m: float = 100.0, slot_duration_s: float = 1.0) -> CUavState:
    """Position on the orbit at slot ``t``; altitude and speed never change."""
    omega = c.speed_mps / radius_m if radius_m > 0 else 0.0
    angle = c.orbit_phase_rad + omega * t * slot_duration_s
    cx, cy = c.orbit_center_m
    pos = (cx + radius_m * math.cos(angle), cy + radius_m * math.sin(angle), c.position_m[2])
    return replace(c, position_m=pos, heading_rad=(angle + math.pi / 2) % (2 * math.pi))
