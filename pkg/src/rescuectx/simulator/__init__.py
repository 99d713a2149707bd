"""Scenario-driven generator of the monitored area and its sensor traffic."""

from .engine import InitialTourist, SimEvent, SimParams, Simulator, estimate_mean_stay, walk
from .preliminary import PrelimParams, PrelimResult, interval_of, run_preliminary
from .scenario import WeatherScenario, builtin_scenario, load_scenario, load_scenario_file, weather_at

__all__ = [
    "InitialTourist", "SimEvent", "SimParams", "Simulator", "estimate_mean_stay", "walk",
    "PrelimParams", "PrelimResult", "interval_of", "run_preliminary",
    "WeatherScenario", "builtin_scenario", "load_scenario", "load_scenario_file", "weather_at",
]
