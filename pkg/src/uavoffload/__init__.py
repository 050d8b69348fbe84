"""Joint task offloading and resource allocation for a UAV/vehicle edge network."""

from .scenario import (ConfigError, Mode, OffloadProfile, Scenario, ScenarioConfig, build_scenario,
                       load_config, load_scenario, validate_profile)

__version__ = "0.1.0"
