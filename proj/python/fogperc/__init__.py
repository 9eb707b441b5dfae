"""Joint sensing, communication and computation allocation for cooperative
perception in fog vehicular networks."""

import json

from . import _fogperc
from ._fogperc import (
    Config,
    ConfigError,
    FreqSolution,
    Trainer,
    allocate_frequencies,
    computation_objective,
    grid_search_oracle,
    load_config,
    parse_config,
    temporal_value_linear,
)

__all__ = [
    "Config",
    "ConfigError",
    "FreqSolution",
    "Trainer",
    "allocate_frequencies",
    "computation_objective",
    "config_dict",
    "evaluate",
    "grid_search_oracle",
    "load_config",
    "parse_config",
    "run_baseline",
    "run_oracles",
    "temporal_value_linear",
]


def config_dict(config):
    """Resolved configuration as a plain dict."""
    return json.loads(config.to_json())


def run_baseline(config, name, episodes=0):
    """Summary dict of a baseline ("distance-full", "max-sum-rate" or "random")
    on the evaluation episodes."""
    return json.loads(_fogperc.run_baseline(config, name, episodes))


def run_oracles(config):
    """Oracle report dict for the matching and frequency fast paths."""
    return json.loads(_fogperc.run_oracles(config))


def evaluate(trainer, episodes=0):
    """Greedy evaluation summary of a trainer's actors."""
    return json.loads(trainer.evaluate(episodes))
