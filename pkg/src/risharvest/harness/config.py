"""Experiment configuration: YAML in, validated dataclasses out.

The schema is the dataclass tree itself. Unknown keys are hard errors
with the offending field path spelled out; missing keys fall back to the
dataclass defaults. The resolved config (all defaults applied) is what
runs embed and hash, so outputs never depend on implicit defaults.
"""

import dataclasses
import hashlib
import json

import yaml

from ..energy import EhProtocol
from ..env import EnvConfig
from ..rl.agents import AgentConfig


class ConfigError(Exception):
    """Bad experiment configuration; message carries the field path."""


@dataclasses.dataclass
class RunConfig:
    episodes: int = 500
    seeds: tuple = (0, 1, 2)
    eval_slots: int = 100        # held-out slots for policy evaluation
    outdir: str = "results"
    save_checkpoint: bool = True
    log_slots: bool = False      # also write per-slot rows (large)
    updates_per_step: int = 1

    def validate(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed")
        if self.eval_slots < 1:
            raise ValueError("eval_slots must be >= 1")
        if self.updates_per_step < 1:
            raise ValueError("updates_per_step must be >= 1")


@dataclasses.dataclass
class SearchConfig:
    n_phase: int = 8
    n_scalar: int = 9
    power_resolution: int = 4
    # total power levels matter: the rectifier saturates, so the best
    # efficiency often sits at a backed off transmit power
    power_levels: tuple = (0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)
    sweep_passes: int = 2
    budget: int = 200000         # per slot evaluation cap

    def validate(self):
        if min(self.n_phase, self.n_scalar, self.power_resolution,
               self.sweep_passes) < 1:
            raise ValueError("search grid sizes must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


@dataclasses.dataclass
class ExperimentConfig:
    env: EnvConfig = dataclasses.field(default_factory=EnvConfig)
    agent: AgentConfig = dataclasses.field(default_factory=AgentConfig)
    run: RunConfig = dataclasses.field(default_factory=RunConfig)
    search: SearchConfig = dataclasses.field(default_factory=SearchConfig)

    def validate(self):
        self.env.validate()
        self.agent.validate()
        self.run.validate()
        self.search.validate()


_TUPLE_FIELDS = {"seeds", "hidden", "bs_position", "uav_start", "bounds_m",
                 "power_levels"}


def _coerce(value, default, path):
    # YAML gives lists and plain scalars; the dataclasses want tuples in
    # a few places and floats where defaults are floats
    name = path.rsplit(".", 1)[-1]
    if name == "protocol":
        if isinstance(value, EhProtocol):
            return value
        try:
            return EhProtocol(str(value).upper())
        except ValueError:
            raise ConfigError(
                "%s: expected one of TS, PS, HYBRID, got %r"
                % (path, value)) from None
    if name in _TUPLE_FIELDS:
        if not isinstance(value, (list, tuple)):
            raise ConfigError("%s: expected a list" % path)
        return tuple(tuple(v) if isinstance(v, (list, tuple)) else v
                     for v in value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError("%s: expected true/false" % path)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("%s: expected a number" % path)
        return float(value)
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("%s: expected an integer" % path)
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError("%s: expected a string" % path)
        return value
    return value


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("%s: expected a mapping" % path)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    probe = cls()
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError("%s.%s: unknown key" % (path, key))
        default = getattr(probe, key)
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value,
                                 "%s.%s" % (path, key))
        else:
            kwargs[key] = _coerce(value, default, "%s.%s" % (path, key))
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError("%s: %s" % (path, exc)) from None


def config_from_dict(data):
    cfg = _build(ExperimentConfig, data, "config")
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path) from None
    except yaml.YAMLError as exc:
        raise ConfigError("invalid YAML in %s: %s" % (path, exc)) from None
    if data is None:
        data = {}
    return config_from_dict(data)


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        out = {}
        for f in dataclasses.fields(obj):
            out[f.name] = _plain(getattr(obj, f.name))
        return out
    if isinstance(obj, EhProtocol):
        return obj.value
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    return obj


def resolved_dict(cfg):
    """Full nested dict with every default filled in."""
    return _plain(cfg)


def config_hash(cfg):
    """Stable digest of the resolved configuration."""
    canon = json.dumps(resolved_dict(cfg), sort_keys=True,
                       separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def dump_config(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(resolved_dict(cfg), fh, sort_keys=False)
