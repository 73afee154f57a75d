"""Bounded-suboptimal multi-agent path finding with flex-aware conflict-based
search, a benchmark harness, and an exhaustive optimal oracle for tiny
instances."""

from .flex import FlexMode
from .highlevel import SolveResult, Solver, SolverConfig, solve
from .map_io import AgentSpec, GridMap, Instance, load_instance, parse_map, parse_scenario
from .oracle import optimal_soc, validate

__all__ = [
    "AgentSpec", "FlexMode", "GridMap", "Instance", "SolveResult", "Solver",
    "SolverConfig", "load_instance", "optimal_soc", "parse_map",
    "parse_scenario", "solve", "validate",
]
