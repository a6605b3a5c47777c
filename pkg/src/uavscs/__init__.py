"""Dual-UAV secure communication and sensing: joint trajectory and beamforming optimization."""
from .pipeline import MissionResult, run_benchmark, run_bcd, run_scheme, run_two_phase
from .scenario import Scenario, SolverConfig, load_scenario, preset_scenario

__all__ = ["MissionResult", "Scenario", "SolverConfig", "load_scenario", "preset_scenario",
           "run_bcd", "run_benchmark", "run_scheme", "run_two_phase"]
__version__ = "0.1.0"
