"""Slotted scheduler for open and secret traffic on a cognitive OFDMA downlink."""

from .core import (ChannelState, ConfigError, ControlAction, QueueState, ScenarioConfig,
                   apply_overrides, load_config, validate_config)
from .overlay import OverlayReport, check_full_overlay, overlay_constants, static_overlay_oracle
from .resource_alloc import Allocation, solve_allocation
from .sim import RunMetrics, run_scenario, run_slot

__all__ = [
    "Allocation", "ChannelState", "ConfigError", "ControlAction", "OverlayReport", "QueueState",
    "RunMetrics", "ScenarioConfig", "apply_overrides", "check_full_overlay", "load_config",
    "overlay_constants", "run_scenario", "run_slot", "solve_allocation", "static_overlay_oracle",
    "validate_config",
]
