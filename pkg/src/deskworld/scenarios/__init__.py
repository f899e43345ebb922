"""Offline drivers: pose-rejection image capture and scenario dataset export."""

from .capture import CaptureConfig, capture_dataset
from .recipes import SCENARIO_KINDS, ScenarioSpec, generate_scenario

__all__ = [
    "CaptureConfig", "capture_dataset",
    "SCENARIO_KINDS", "ScenarioSpec", "generate_scenario",
]
