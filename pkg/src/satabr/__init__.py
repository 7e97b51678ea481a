"""Cell-level simulator of TCP over ATM ABR/UBR on long-delay satellite paths."""

from .config import PRESETS, ScenarioConfig, get_preset
from .scenario import RunReport, Scenario, boundedness_verdict, run_scenario

__all__ = [
    "PRESETS",
    "RunReport",
    "Scenario",
    "ScenarioConfig",
    "boundedness_verdict",
    "get_preset",
    "run_scenario",
]
__version__ = "0.1.0"
