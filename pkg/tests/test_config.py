"""Flat-file config round-trip and validation tests."""

import dataclasses

import pytest

from hillcar.config import (
    RunConfig,
    TileParams,
    config_from_flat,
    load_config,
    parse_flat,
    serialize_config,
    to_flat,
)
from hillcar.errors import ConfigError


def test_serialize_parse_round_trip():
    cfg = RunConfig(agent="qlearning", episodes=7, seed=42, v_thresh=33.5)
    text = serialize_config(cfg)
    back = config_from_flat(parse_flat(text))
    assert back == cfg


def test_round_trip_preserves_float_precision():
    cfg = RunConfig(v_thresh=0.1 + 0.2)  # a value repr must not truncate
    back = config_from_flat(parse_flat(serialize_config(cfg)))
    assert back.v_thresh == cfg.v_thresh


def test_file_round_trip(tmp_path):
    cfg = RunConfig(agent="qlearning", episodes=3)
    p = tmp_path / "run.cfg"
    p.write_text(serialize_config(cfg))
    assert load_config(p) == cfg


def test_comments_and_blanks_ignored():
    raw = parse_flat("# full line comment\n\nepisodes = 9  # trailing\n")
    cfg = config_from_flat(raw)
    assert cfg.episodes == 9


def test_partial_overlay_keeps_defaults():
    cfg = config_from_flat({"plant.k_f": "0.2", "agent": "qlearning"})
    assert cfg.plant.k_f == 0.2
    assert cfg.plant.g_eff == 400.0
    assert cfg.agent == "qlearning"
    assert cfg.episodes == RunConfig().episodes


def test_overlay_on_custom_base():
    base = RunConfig(episodes=99)
    cfg = config_from_flat({"seed": "5"}, base)
    assert cfg.episodes == 99
    assert cfg.seed == 5


def test_every_field_appears_in_flat_form():
    flat = to_flat(RunConfig())
    names = {f.name for f in dataclasses.fields(RunConfig)}
    prefixes = {k.split(".")[0] for k in flat if "." in k}
    scalars = {k for k in flat if "." not in k}
    assert scalars | prefixes == names
    assert "kalman.q" in flat and "track.goal_x" in flat


def test_bool_formatting_is_lowercase():
    text = serialize_config(RunConfig(realtime=True))
    assert "realtime = true" in text
    assert config_from_flat(parse_flat(text)).realtime is True


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_flat({"plant.mass": "3"})


def test_bad_literal_rejected():
    with pytest.raises(ConfigError, match="cannot parse"):
        config_from_flat({"episodes": "many"})
    with pytest.raises(ConfigError, match="cannot parse"):
        config_from_flat({"realtime": "yes"})


def test_malformed_line_rejected():
    with pytest.raises(ConfigError, match="line 1"):
        parse_flat("episodes 9\n")


def test_semantic_validation():
    with pytest.raises(ConfigError):
        config_from_flat({"agent": "dqn"})
    with pytest.raises(ConfigError):
        config_from_flat({"episodes": "0"})
    with pytest.raises(ConfigError):
        config_from_flat({"port": "70000"})
    with pytest.raises(ConfigError):
        config_from_flat({"track.goal_x": "10"})  # goal must sit on the left slope
    with pytest.raises(ConfigError):
        config_from_flat({"plant.a_max": "5000"})  # must not out-muscle gravity


def test_tile_params_validation():
    with pytest.raises(ConfigError):
        TileParams(n_tilings=0).validate()
    with pytest.raises(ConfigError):
        TileParams(v_max=-1.0).validate()
