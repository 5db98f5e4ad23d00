"""Obstacle problem solver with Weiss/Monneau diagnostics and blow-up classification."""

from ._core import (
    ConfigError,
    LabError,
    __version__,
    list_scenarios,
    psi,
    refinement_study,
    run_scenario,
    scenario_config,
    set_threads,
    theta,
    validate_config,
)

__all__ = [
    "ConfigError",
    "LabError",
    "__version__",
    "list_scenarios",
    "psi",
    "refinement_study",
    "run_scenario",
    "scenario_config",
    "set_threads",
    "theta",
    "validate_config",
]
