"""Experiment configuration: JSON file plus flag overrides, validated up front."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .models import MODELS

EXPERIMENTS = (
    "lyapunov",
    "chi-min",
    "pliss",
    "folner",
    "gibbs",
    "entropy",
    "density",
    "bipliss",
    "appendix",
    "distortion",
    "vitali",
    "all",
)

REQUIRED_KEYS = ("experiment", "model", "seed")

DEFAULT_MODEL = {
    "lyapunov": "cat2",
    "chi-min": "cat2",
    "pliss": None,
    "folner": "da2",
    "gibbs": "cat2",
    "entropy": "cat2",
    "density": "da2",
    "bipliss": None,
    "appendix": "cat2",
    "distortion": "cat2",
    "vitali": "cat2",
    "all": None,
}

# thresholds a < a' < a'' per model: a' sits below the typical expansion
# log m(Df|F) so Pliss times have positive density
THRESHOLDS = {
    "cat2": {"a": 0.5, "a_prime": 0.9, "a_pp": 0.95},
    "cat3": {"a": -0.2, "a_prime": -0.1, "a_pp": -0.05},
    "da2": {"a": 0.05, "a_prime": 0.1, "a_pp": 0.3},
    "solenoid": {"a": 0.3, "a_prime": 0.5, "a_pp": 0.6},
    "translation": {"a": -0.2, "a_prime": -0.1, "a_pp": -0.05},
}

# numeric parameters that may appear at the top level of a config file or as flags
NUMERIC_KEYS = (
    "n", "N", "p_max", "samples", "resolution", "epsilon", "a", "a_prime", "a_pp",
    "gamma", "m", "block_max", "trials", "anchors", "orbits", "length",
)

MINIMUMS = {
    "lyapunov": {"n": 100},
    "chi-min": {"p_max": 1},
    "appendix": {"n": 100, "p_max": 1},
    "folner": {"N": 10, "samples": 1},
    "gibbs": {"N": 10, "samples": 1},
    "entropy": {"block_max": 2, "length": 2},
    "pliss": {"trials": 1},
    "bipliss": {"trials": 1},
    "distortion": {"anchors": 1},
    "density": {"anchors": 1},
    "vitali": {"trials": 1},
}


class ConfigError(ValueError):
    """Schema or validation failure (exit code 2)."""


@dataclass
class ExperimentConfig:
    experiment: str
    model: str = None
    model_params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "runs"
    jobs: int = 1
    self_test: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def model_name(self):
        return self.model if self.model is not None else DEFAULT_MODEL.get(self.experiment)

    def thresholds(self):
        base = dict(THRESHOLDS.get(self.model_name, THRESHOLDS["cat2"]))
        base.update({k: self.params[k] for k in ("a", "a_prime", "a_pp") if k in self.params})
        return base

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.model is not None and self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {', '.join(sorted(MODELS))}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        if int(self.jobs) < 1:
            raise ConfigError("jobs must be >= 1")
        if not isinstance(self.model_params, dict) or not isinstance(self.params, dict):
            raise ConfigError("model_params and params must be objects")
        th = self.thresholds()
        if not th["a"] < th["a_prime"] < th["a_pp"]:
            raise ConfigError("thresholds must satisfy a < a_prime < a_pp")
        if "gamma" in self.params and not 0.0 < float(self.params["gamma"]) < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        for key, lo in MINIMUMS.get(self.experiment, {}).items():
            if key in self.params and self.params[key] < lo:
                raise ConfigError(f"{key} must be >= {lo} for experiment {self.experiment}")
        if self.experiment == "chi-min" and "N" in self.params:
            if self.params["N"] < 10 * self.params.get("p_max", 1):
                raise ConfigError("chi-min needs N >= 10 * p_max")

    def as_dict(self):
        d = asdict(self)
        d["model"] = self.model_name
        return d

    @classmethod
    def from_mapping(cls, data, require_all=False):
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        missing = [k for k in REQUIRED_KEYS if k not in data or data[k] is None]
        if require_all and missing:
            raise ConfigError(
                f"missing required keys: {', '.join(missing)} (required: {', '.join(REQUIRED_KEYS)})"
            )
        if "experiment" not in data:
            raise ConfigError(f"missing required keys: experiment (required: {', '.join(REQUIRED_KEYS)})")
        allowed = {"experiment", "model", "model_params", "seed", "out", "jobs", "self_test", "params"}
        data = dict(data)
        params = dict(data.pop("params", {}) or {})
        for k in NUMERIC_KEYS:
            if k in data:
                params[k] = data.pop(k)
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(unknown)}")
        data["params"] = params
        return cls(**data)


def load_config_file(path):
    """Read a JSON config; an empty file is an empty object."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def stream_rng(seed, *stream):
    """Independent generator for a fixed stream index path under one 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream)))
