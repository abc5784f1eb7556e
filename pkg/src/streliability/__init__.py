"""Randomized approximation of s-t reliability in DAGs, with exact oracles."""

from .config import Config, paper_config, scaled_config
from .exact import exact_reliability
from .fpras import RunReport, run
from .graph import Dag, Instance, TrivialZero, preprocess

__all__ = [
    "Config",
    "Dag",
    "Instance",
    "RunReport",
    "TrivialZero",
    "exact_reliability",
    "paper_config",
    "preprocess",
    "run",
    "scaled_config",
]
