"""thermoc: a deterministic cycle-level mesh NoC simulator with a thermal
proxy, thermal sensor Trojans, in-router anomaly detection, and a
port-shutdown response, plus metrics and labeled-dataset export."""

from .config import SimConfig, load_config
from .engine import World
from .runner import run_scenario

__all__ = ["SimConfig", "World", "load_config", "run_scenario"]
__version__ = "0.1.0"
