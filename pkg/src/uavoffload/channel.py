"""Directional antenna gain, probabilistic LoS air-to-ground channel and
Shannon rates for the UAV-to-vehicle and UAV-to-UAV links."""

from __future__ import annotations

import math

import numpy as np

from .scenario import ChannelParams


class Unreachable(ValueError):
    """The vehicle lies outside the C-UAV's antenna footprint."""


# relative slack on the footprint test; tan(pi/4) evaluates to 1 - 1ulp
_FOOTPRINT_RTOL = 1e-12


def antenna_gain(within_beam: bool, params: ChannelParams) -> float:
    if within_beam:
        return params.main_lobe_gain / params.beamwidth_half_rad ** 2
    return params.out_of_beam_gain


def footprint_radius(altitude_m: float, beamwidth_half_rad: float) -> float:
    return altitude_m * math.tan(beamwidth_half_rad)


def in_range(cuav_pos, vehicle_pos, altitude_m: float, beamwidth_half_rad: float) -> bool:
    """Ground distance from the C-UAV nadir to the vehicle is at most H*tan(Psi)."""
    if altitude_m <= 0:
        raise ValueError("altitude must be positive")
    dx = vehicle_pos[0] - cuav_pos[0]
    dy = vehicle_pos[1] - cuav_pos[1]
    limit = footprint_radius(altitude_m, beamwidth_half_rad)
    return math.hypot(dx, dy) <= limit * (1.0 + _FOOTPRINT_RTOL)


def los_probability(elevation_deg, a: float, b: float):
    return 1.0 / (1.0 + a * np.exp(-b * (np.asarray(elevation_deg, dtype=float) - a)))


def elevation_deg(distance_m, altitude_m: float):
    ratio = np.clip(altitude_m / np.asarray(distance_m, dtype=float), -1.0, 1.0)
    return np.degrees(np.arcsin(ratio))


def expected_u2v_gain(distance_m, altitude_m: float, params: ChannelParams, p_los=None):
    """Mean channel power gain, LoS/NLoS mixture.

    ``p_los`` overrides the elevation-driven LoS probability.
    """
    d = np.asarray(distance_m, dtype=float)
    if p_los is None:
        p_los = los_probability(elevation_deg(d, altitude_m), params.los_a, params.los_b)
    path = params.ref_gain_u2v * d ** (-params.pathloss_exp)
    out = p_los * path + (1.0 - p_los) * params.nlos_factor * path
    return float(out) if np.ndim(out) == 0 else out


def _snr_to_rate(bandwidth, snr):
    return bandwidth * np.log2(1.0 + snr)


def u2v_rate_from_gain(gain, params: ChannelParams):
    g_ant = antenna_gain(True, params)
    noise = params.noise_psd_w_per_hz * params.bandwidth_hz
    return _snr_to_rate(params.bandwidth_hz, params.tx_power_u2v_w * gain * g_ant / noise)


def u2v_rate(cuav_pos, vehicle_pos, params: ChannelParams, altitude_m: float = None) -> float:
    """Average rate (bit/s) on one subchannel from a C-UAV to a ground vehicle."""
    h = cuav_pos[2] - vehicle_pos[2] if altitude_m is None else altitude_m
    if not in_range(cuav_pos, vehicle_pos, h, params.beamwidth_half_rad):
        raise Unreachable("vehicle outside antenna footprint")
    d = math.dist(cuav_pos, vehicle_pos)
    return float(u2v_rate_from_gain(expected_u2v_gain(d, h, params), params))


def u2v_rates(cuav_pos, xs: np.ndarray, ys: np.ndarray, params: ChannelParams, altitude_m: float):
    """Vectorised :func:`u2v_rate` for vehicles already known to be in range."""
    d = np.sqrt((xs - cuav_pos[0]) ** 2 + (ys - cuav_pos[1]) ** 2 + altitude_m ** 2)
    return u2v_rate_from_gain(expected_u2v_gain(d, altitude_m, params), params)


def u2u_rate(cuav_pos, euav_pos, subchannels: int, params: ChannelParams) -> float:
    """Average rate (bit/s) from a C-UAV to the E-UAV over all K_n subchannels."""
    d = math.dist(cuav_pos, euav_pos)
    if d <= 0:
        raise ValueError("C-UAV and E-UAV positions coincide")
    bw = subchannels * params.bandwidth_hz
    snr = (params.tx_power_u2u_w * params.ref_gain_u2u * antenna_gain(True, params) * d ** -2.0
           / (params.noise_psd_w_per_hz * bw))
    return float(_snr_to_rate(bw, snr))
