import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pliss_lab.config import (
    REQUIRED_KEYS,
    ConfigError,
    ExperimentConfig,
    load_config_file,
    stream_rng,
)


def test_defaults_fill_model_and_thresholds():
    cfg = ExperimentConfig("lyapunov")
    assert cfg.model_name == "cat2"
    th = cfg.thresholds()
    assert th["a"] < th["a_prime"] < th["a_pp"]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"experiment": "nope"},
        {"experiment": "lyapunov", "model": "henon"},
        {"experiment": "lyapunov", "seed": -1},
        {"experiment": "lyapunov", "seed": 2**64},
        {"experiment": "lyapunov", "jobs": 0},
        {"experiment": "pliss", "params": {"a": 0.5, "a_prime": 0.4}},
        {"experiment": "bipliss", "params": {"gamma": 1.0}},
        {"experiment": "lyapunov", "params": {"n": 99}},
        {"experiment": "chi-min", "params": {"p_max": 5, "N": 40}},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_required_keys_listed():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_mapping({}, require_all=True)
    for key in REQUIRED_KEYS:
        assert key in str(exc.value)


def test_numeric_keys_move_into_params():
    cfg = ExperimentConfig.from_mapping({"experiment": "lyapunov", "n": 500, "params": {"p_max": 3}})
    assert cfg.params == {"n": 500, "p_max": 3}


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="colour"):
        ExperimentConfig.from_mapping({"experiment": "lyapunov", "colour": 1})


def test_load_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("")
    assert load_config_file(p) == {}
    p.write_text(json.dumps({"experiment": "pliss"}))
    assert load_config_file(p) == {"experiment": "pliss"}
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config_file(p)
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.json")


@given(st.integers(0, 2**64 - 1), st.integers(0, 50))
@settings(deadline=None, max_examples=30)
def test_streams_reproducible_and_distinct(seed, stream):
    a = stream_rng(seed, stream).random(4)
    assert np.array_equal(a, stream_rng(seed, stream).random(4))
    assert not np.array_equal(a, stream_rng(seed, stream + 1).random(4))
