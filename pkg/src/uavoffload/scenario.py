"""Domain types, scenario configuration and seeded random streams.

Config files are TOML. Keys follow the usual symbol names of the system
model (``F_u_max``, ``K_n``, ``beta_0`` ...) and values are given in the
customary units (GHz, Mb, dBm, kHz, $/GHz). Everything is converted to
linear SI units once, in :func:`load_config`; the rest of the package only
sees watts, hertz, bits and seconds.
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

try:  # Python >= 3.11
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml


class ConfigError(ValueError):
    """Raised for unparsable config documents or out-of-range fields."""


class ProfileError(ValueError):
    """Raised when an offloading profile violates a system constraint."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def _require(cond: bool, name: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def _check_range(name: str, lo_hi: Sequence[float], lower: float = 0.0, strict: bool = False) -> None:
    lo, hi = lo_hi
    _require(lo <= hi, name, f"bounds not ordered ({lo} > {hi})")
    if strict:
        _require(lo > lower, name, f"lower bound must be > {lower}")
    else:
        _require(lo >= lower, name, f"lower bound must be >= {lower}")


# ---------------------------------------------------------------------------
# entities

Vec3 = tuple


@dataclass(frozen=True)
class Task:
    data_size_bits: float
    intensity_cycles_per_bit: float
    deadline_s: float

    def __post_init__(self):
        for f in ("data_size_bits", "intensity_cycles_per_bit", "deadline_s"):
            if not getattr(self, f) > 0:
                raise ValueError(f"Task.{f} must be strictly positive")

    @property
    def cycles(self) -> float:
        return self.data_size_bits * self.intensity_cycles_per_bit


@dataclass(frozen=True)
class VehicleState:
    position_m: Vec3
    speed_mps: float
    heading_rad: float
    idle_freq_hz: float

    def __post_init__(self):
        if self.position_m[2] != 0.0:
            raise ValueError("vehicles live on the ground plane (z must be 0)")
        if self.idle_freq_hz < 0:
            raise ValueError("idle_freq_hz must be >= 0")


@dataclass(frozen=True)
class CUavState:
    position_m: Vec3
    speed_mps: float
    heading_rad: float
    task_prob: float
    local_freq_hz: float
    subchannels: int
    orbit_center_m: tuple = (0.0, 0.0)
    orbit_phase_rad: float = 0.0
    current_task: Optional[Task] = None

    def __post_init__(self):
        if not 0.0 <= self.task_prob <= 1.0:
            raise ValueError("task_prob must lie in [0, 1]")
        if self.subchannels < 1:
            raise ValueError("subchannels must be >= 1")
        if not self.local_freq_hz > 0:
            raise ValueError("local_freq_hz must be > 0")


@dataclass(frozen=True)
class EUavState:
    position_m: Vec3
    max_freq_hz: float

    def __post_init__(self):
        if not self.max_freq_hz > 0:
            raise ValueError("max_freq_hz must be > 0")


# ---------------------------------------------------------------------------
# parameter blocks (SI units)


@dataclass(frozen=True)
class ChannelParams:
    bandwidth_hz: float = 200e3
    beamwidth_half_rad: float = math.pi / 4
    main_lobe_gain: float = 2.2846
    out_of_beam_gain: float = 0.0
    ref_gain_u2v: float = 1.42e-4
    ref_gain_u2u: float = 1.42e-4
    nlos_factor: float = 0.2
    pathloss_exp: float = 2.3
    los_a: float = 10.0
    los_b: float = 0.6
    noise_psd_w_per_hz: float = dbm_to_watt(-174.0)
    tx_power_u2v_w: float = dbm_to_watt(20.0)
    tx_power_u2u_w: float = dbm_to_watt(20.0)

    def validate(self) -> None:
        _require(0 < self.beamwidth_half_rad < math.pi / 2, "Psi", "must lie in (0, pi/2)")
        _require(0 < self.nlos_factor < 1, "kappa", "must lie in (0, 1)")
        _require(self.out_of_beam_gain == 0.0, "g", "out-of-beam gain is fixed at 0")
        for name, v in (("B", self.bandwidth_hz), ("G0", self.main_lobe_gain),
                        ("beta_0", self.ref_gain_u2v), ("beta_0_u2u", self.ref_gain_u2u),
                        ("sigma2", self.noise_psd_w_per_hz), ("P_nm", self.tx_power_u2v_w),
                        ("P_nu", self.tx_power_u2u_w), ("mu", self.pathloss_exp),
                        ("a", self.los_a), ("b", self.los_b)):
            _require(v > 0, name, "must be positive")


@dataclass(frozen=True)
class UtilityParams:
    delay_weight: float = 0.9
    energy_weight: float = 0.1
    log_offset: float = 1.0
    mec_price_per_hz: float = 0.001e-9
    switched_capacitance: float = 1e-28

    def validate(self) -> None:
        _require(abs(self.delay_weight + self.energy_weight - 1.0) <= 1e-9,
                 "alpha_n/beta_n", "delay_weight + energy_weight ≠ 1")
        _require(self.delay_weight >= 0 and self.energy_weight >= 0, "alpha_n/beta_n",
                 "weights must be nonnegative")
        _require(self.log_offset > 0, "beta", "log offset must be > 0")
        _require(self.mec_price_per_hz >= 0, "rho_0", "price must be >= 0")
        _require(self.switched_capacitance > 0, "k", "must be > 0")


@dataclass(frozen=True)
class MobilityParams:
    memory_degree: float = 0.8
    mean_speed_mps: float = 10.0
    speed_std: float = 2.0
    mean_heading_rad: float = 0.0
    heading_std: float = 0.5
    speed_bounds: tuple = (0.0, 20.0)
    heading_bounds: tuple = (-math.pi, math.pi)
    vehicle_density_per_km2: float = 200.0
    slot_duration_s: float = 1.0

    def validate(self) -> None:
        _require(0.0 <= self.memory_degree <= 1.0, "alpha", "memory degree must lie in [0, 1]")
        _require(self.speed_bounds[0] <= self.speed_bounds[1], "v_bounds", "bounds not ordered")
        _require(self.heading_bounds[0] <= self.heading_bounds[1], "theta_bounds", "bounds not ordered")
        _require(self.vehicle_density_per_km2 > 0, "rho_v", "density must be > 0")
        _require(self.slot_duration_s > 0, "delta_t", "slot duration must be > 0")
        _require(self.speed_std >= 0 and self.heading_std >= 0, "sigma_v/sigma_d", "must be >= 0")


@dataclass(frozen=True)
class GaParams:
    generations: int = 200
    population: int = 50
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1

    def validate(self) -> None:
        _require(self.generations >= 1, "G", "must be >= 1")
        _require(self.population >= 2, "L", "must be >= 2")
        _require(0 <= self.crossover_prob <= 1, "pc", "must lie in [0, 1]")
        _require(0 <= self.mutation_prob <= 1, "pm", "must lie in [0, 1]")


@dataclass(frozen=True)
class TaskRanges:
    data_size_bits: tuple = (1e6, 3e6)
    intensity_cycles_per_bit: tuple = (100.0, 1000.0)
    deadline_s: tuple = (0.5, 1.0)
    task_prob: tuple = (0.8, 1.0)

    def validate(self, slot_duration_s: float) -> None:
        _check_range("D_n", self.data_size_bits, strict=True)
        _check_range("eta_n", self.intensity_cycles_per_bit, strict=True)
        _check_range("T_max", self.deadline_s, strict=True)
        _check_range("rho_n", self.task_prob)
        _require(self.task_prob[1] <= 1.0, "rho_n", "probabilities must be <= 1")
        _require(self.deadline_s[1] <= slot_duration_s + 1e-12, "T_max",
                 "deadline must not exceed the slot duration delta_t")


@dataclass(frozen=True)
class NetworkParams:
    n_cuavs: int = 15
    area_side_m: float = 2000.0
    grid_side_m: float = 400.0
    cuav_altitude_m: float = 100.0
    euav_altitude_m: float = 300.0
    euav_xy_m: tuple = (0.0, 0.0)
    euav_max_freq_hz: float = 30e9
    cuav_freq_range_hz: tuple = (1e9, 2e9)
    vehicle_freq_range_hz: tuple = (0.0, 1e9)
    subchannels: int = 5
    orbit_radius_m: float = 100.0
    cuav_speed_mps: float = 20.0
    bisection_tol: float = 1e-22

    @property
    def cells_per_side(self) -> int:
        return int(round(self.area_side_m / self.grid_side_m))

    def validate(self) -> None:
        _require(self.n_cuavs >= 1, "N", "must be >= 1")
        _require(self.area_side_m > 0 and self.grid_side_m > 0, "area/grid", "must be positive")
        _require(self.n_cuavs <= self.cells_per_side ** 2, "N",
                 f"only {self.cells_per_side ** 2} grid cells are available")
        _require(self.cuav_altitude_m > 0, "H", "must be > 0")
        _require(self.euav_altitude_m > 0, "H_u", "must be > 0")
        _require(self.euav_max_freq_hz > 0, "F_u_max", "must be > 0")
        _check_range("f_uav", self.cuav_freq_range_hz, strict=True)
        _check_range("f_veh", self.vehicle_freq_range_hz)
        _require(self.subchannels >= 1, "K_n", "must be >= 1")
        _require(self.orbit_radius_m >= 0, "radius", "must be >= 0")
        _require(self.cuav_speed_mps > 0, "V", "must be > 0")
        _require(self.bisection_tol > 0, "epsilon", "must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    network: NetworkParams = field(default_factory=NetworkParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    utility: UtilityParams = field(default_factory=UtilityParams)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    ga: GaParams = field(default_factory=GaParams)
    tasks: TaskRanges = field(default_factory=TaskRanges)
    seed: int = 0
    slots: int = 100

    def validate(self) -> "ScenarioConfig":
        self.network.validate()
        self.channel.validate()
        self.utility.validate()
        self.mobility.validate()
        self.ga.validate()
        self.tasks.validate(self.mobility.slot_duration_s)
        _require(self.slots >= 1, "slots", "must be >= 1")
        return self

    def replace(self, **changes) -> "ScenarioConfig":
        """Return a copy with dotted-path overrides, e.g. ``network__n_cuavs=5``."""
        cfg = self
        for key, value in changes.items():
            if "__" in key:
                block, attr = key.split("__", 1)
                sub = dataclasses.replace(getattr(cfg, block), **{attr: value})
                cfg = dataclasses.replace(cfg, **{block: sub})
            else:
                cfg = dataclasses.replace(cfg, **{key: value})
        return cfg.validate()


# ---------------------------------------------------------------------------
# TOML loading

# section -> key -> (block, attribute, converter)
_GHZ = lambda v: float(v) * 1e9  # noqa: E731
_SCHEMA = {
    "network": {
        "N": ("network", "n_cuavs", int),
        "area": ("network", "area_side_m", float),
        "grid": ("network", "grid_side_m", float),
        "H": ("network", "cuav_altitude_m", float),
        "H_u": ("network", "euav_altitude_m", float),
        "euav_xy": ("network", "euav_xy_m", lambda v: tuple(float(x) for x in v)),
        "F_u_max": ("network", "euav_max_freq_hz", _GHZ),
        "f_uav": ("network", "cuav_freq_range_hz", lambda v: tuple(_GHZ(x) for x in v)),
        "K_n": ("network", "subchannels", int),
        "radius": ("network", "orbit_radius_m", float),
        "V": ("network", "cuav_speed_mps", float),
        "epsilon": ("network", "bisection_tol", float),
        "delta_t": ("mobility", "slot_duration_s", float),
    },
    "vehicles": {
        "rho_v": ("mobility", "vehicle_density_per_km2", float),
        "f_veh": ("network", "vehicle_freq_range_hz", lambda v: tuple(_GHZ(x) for x in v)),
        "alpha": ("mobility", "memory_degree", float),
        "v_mean": ("mobility", "mean_speed_mps", float),
        "sigma_v": ("mobility", "speed_std", float),
        "theta_mean": ("mobility", "mean_heading_rad", float),
        "sigma_d": ("mobility", "heading_std", float),
        "v_bounds": ("mobility", "speed_bounds", lambda v: tuple(float(x) for x in v)),
        "theta_bounds": ("mobility", "heading_bounds", lambda v: tuple(float(x) for x in v)),
    },
    "task": {
        "D_n": ("tasks", "data_size_bits", lambda v: tuple(float(x) * 1e6 for x in v)),
        "eta_n": ("tasks", "intensity_cycles_per_bit", lambda v: tuple(float(x) for x in v)),
        "T_max": ("tasks", "deadline_s", lambda v: tuple(float(x) for x in v)),
        "rho_n": ("tasks", "task_prob", lambda v: tuple(float(x) for x in v)),
    },
    "channel": {
        "B": ("channel", "bandwidth_hz", lambda v: float(v) * 1e3),
        "Psi": ("channel", "beamwidth_half_rad", float),
        "G0": ("channel", "main_lobe_gain", float),
        "g": ("channel", "out_of_beam_gain", float),
        "beta_0": ("channel", "ref_gain_u2v", float),
        "beta_0_u2u": ("channel", "ref_gain_u2u", float),
        "kappa": ("channel", "nlos_factor", float),
        "mu": ("channel", "pathloss_exp", float),
        "a": ("channel", "los_a", float),
        "b": ("channel", "los_b", float),
        "sigma2": ("channel", "noise_psd_w_per_hz", dbm_to_watt),
        "P_nm": ("channel", "tx_power_u2v_w", dbm_to_watt),
        "P_nu": ("channel", "tx_power_u2u_w", dbm_to_watt),
    },
    "utility": {
        "alpha_n": ("utility", "delay_weight", float),
        "beta_n": ("utility", "energy_weight", float),
        "beta": ("utility", "log_offset", float),
        "rho_0": ("utility", "mec_price_per_hz", lambda v: float(v) * 1e-9),
        "k": ("utility", "switched_capacitance", float),
    },
    "ga": {
        "G": ("ga", "generations", int),
        "L": ("ga", "population", int),
        "pc": ("ga", "crossover_prob", float),
        "pm": ("ga", "mutation_prob", float),
    },
}
_TOP_LEVEL = {"seed": int, "slots": int}


def load_config(text: str) -> ScenarioConfig:
    """Parse a TOML scenario document; missing keys keep their defaults."""
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    blocks: dict = {}
    top: dict = {}
    for key, value in doc.items():
        if key in _TOP_LEVEL:
            top[key] = _TOP_LEVEL[key](value)
            continue
        if key not in _SCHEMA:
            raise ConfigError(f"{key}: unknown section or key")
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a [section]")
        for sub, raw in value.items():
            if sub not in _SCHEMA[key]:
                raise ConfigError(f"{key}.{sub}: unknown key")
            block, attr, conv = _SCHEMA[key][sub]
            try:
                blocks.setdefault(block, {})[attr] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}.{sub}: bad value {raw!r} ({exc})") from exc

    cfg = ScenarioConfig()
    parts = {name: dataclasses.replace(getattr(cfg, name), **attrs) for name, attrs in blocks.items()}
    cfg = dataclasses.replace(cfg, **parts, **top)
    return cfg.validate()


# ---------------------------------------------------------------------------
# random streams

_STREAM_IDS: dict = {}


def _stream_id(name: str) -> int:
    if name not in _STREAM_IDS:
        _STREAM_IDS[name] = zlib.crc32(name.encode())
    return _STREAM_IDS[name]


def stream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Independent generator for a named stream, e.g. ``stream(7, "tasks", t, n)``.

    Streams are keyed by (seed, name, index...) through SeedSequence spawn keys,
    so draws on one stream never shift another.
    """
    key = (_stream_id(name),) + tuple(int(i) for i in index)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def spawn_task(cuav: CUavState, ranges: TaskRanges, rng: np.random.Generator) -> Optional[Task]:
    # four uniforms are always consumed so attribute draws stay paired
    # across runs that differ only in task_prob
    u = rng.random(4).tolist()
    if not u[0] < cuav.task_prob:
        return None
    lerp = lambda lo_hi, x: lo_hi[0] + (lo_hi[1] - lo_hi[0]) * x  # noqa: E731
    return Task(
        data_size_bits=lerp(ranges.data_size_bits, u[1]),
        intensity_cycles_per_bit=lerp(ranges.intensity_cycles_per_bit, u[2]),
        deadline_s=lerp(ranges.deadline_s, u[3]),
    )


# ---------------------------------------------------------------------------
# materialized scenario


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    cuavs: tuple
    euav: EUavState
    vehicles: tuple

    @property
    def seed(self) -> int:
        return self.config.seed


def build_scenario(config: ScenarioConfig) -> Scenario:
    from . import mobility  # local import: mobility depends on this module

    config.validate()
    net = config.network
    cuavs = mobility.place_cuavs(net, config.tasks, stream(config.seed, "cuavs"))
    vehicles = mobility.place_vehicles(
        net.area_side_m, config.mobility.vehicle_density_per_km2, stream(config.seed, "vehicles"),
        config.mobility, net.vehicle_freq_range_hz,
    )
    euav = EUavState(
        position_m=(float(net.euav_xy_m[0]), float(net.euav_xy_m[1]), float(net.euav_altitude_m)),
        max_freq_hz=net.euav_max_freq_hz,
    )
    return Scenario(config=config, cuavs=tuple(cuavs), euav=euav, vehicles=tuple(vehicles))


def load_scenario(config_text: str = "", **overrides) -> Scenario:
    cfg = load_config(config_text)
    if overrides:
        cfg = cfg.replace(**overrides)
    return build_scenario(cfg)


# ---------------------------------------------------------------------------
# offloading profiles


class Mode(str, Enum):
    LOCAL = "local"
    MEC = "mec"
    VEH = "veh"


@dataclass(frozen=True)
class Decision:
    mode: Mode
    mec_freq_hz: Optional[float] = None
    fog_set: Optional[tuple] = None
    division: Optional[tuple] = None


@dataclass(frozen=True)
class OffloadProfile:
    decisions: Mapping  # C-UAV id -> Decision

    def modes(self) -> dict:
        return {n: d.mode for n, d in self.decisions.items()}


def validate_profile(profile: OffloadProfile, max_freq_hz: float,
                     subchannels: Mapping = None, coverage: Mapping = None,
                     tol: float = 1e-9) -> None:
    """Raise :class:`ProfileError` unless every system constraint holds.

    ``subchannels`` maps C-UAV id to K_n and ``coverage`` maps C-UAV id to the
    set of in-range vehicle ids; both are optional.
    """
    total = 0.0
    claimed: dict = {}
    for n, d in profile.decisions.items():
        if not isinstance(d.mode, Mode):
            raise ProfileError(f"uav {n}: mode {d.mode!r} is not one of local/mec/veh")
        if d.mode is Mode.MEC:
            if d.mec_freq_hz is None or not 0 <= d.mec_freq_hz <= max_freq_hz * (1 + tol):
                raise ProfileError(f"uav {n}: MEC share {d.mec_freq_hz} outside [0, F_u_max]")
            total += d.mec_freq_hz
        elif d.mec_freq_hz:
            raise ProfileError(f"uav {n}: MEC share set on a {d.mode.value} decision")
        if d.mode is Mode.VEH:
            if not d.fog_set or d.division is None or len(d.fog_set) != len(d.division):
                raise ProfileError(f"uav {n}: fog set and division must be non-empty and aligned")
            lam = np.asarray(d.division, dtype=float)
            if np.any(lam < -tol) or np.any(lam > 1 + tol) or abs(lam.sum() - 1.0) > tol:
                raise ProfileError(f"uav {n}: division {d.division} is not on the simplex")
            if len(set(d.fog_set)) != len(d.fog_set):
                raise ProfileError(f"uav {n}: fog set repeats a vehicle")
            if subchannels is not None and len(d.fog_set) > subchannels[n]:
                raise ProfileError(f"uav {n}: {len(d.fog_set)} fog nodes exceed K_n={subchannels[n]}")
            if coverage is not None and not set(d.fog_set) <= set(coverage[n]):
                raise ProfileError(f"uav {n}: fog node outside communication range")
            for v in d.fog_set:
                if v in claimed:
                    raise ProfileError(f"vehicle {v} serves both uav {claimed[v]} and uav {n}")
                claimed[v] = n
        elif d.fog_set or d.division:
            raise ProfileError(f"uav {n}: fog set given on a {d.mode.value} decision")
    if total > max_freq_hz * (1 + tol):
        raise ProfileError(f"MEC shares sum to {total:.6g} Hz > F_u_max={max_freq_hz:.6g} Hz")
