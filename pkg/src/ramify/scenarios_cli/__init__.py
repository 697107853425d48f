"""Scenario files, the runner that checks them, charts and the command line."""

from .fileformat import ParseError, Scenario, ValidationError, load_scenario, parse_scenario, print_scenario
from .runner import Report, reproduce_all, run_scenario

__all__ = [
    "ParseError",
    "Report",
    "Scenario",
    "ValidationError",
    "load_scenario",
    "parse_scenario",
    "print_scenario",
    "reproduce_all",
    "run_scenario",
]
