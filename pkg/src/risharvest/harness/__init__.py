"""Experiment harness: config loading, runs, figures, CLI."""

from .config import (ConfigError, ExperimentConfig, config_hash,
                     load_config)
from .experiments import (algorithm_experiment, amended,
                          impairment_experiment, protocol_experiment,
                          reproduce_all)
from .runner import (evaluate_policy, evaluate_run, exhaustive_eval,
                     train_run)

__all__ = [
    "ConfigError", "ExperimentConfig", "config_hash", "load_config",
    "algorithm_experiment", "amended", "impairment_experiment",
    "protocol_experiment", "reproduce_all", "evaluate_policy",
    "evaluate_run", "exhaustive_eval", "train_run",
]
