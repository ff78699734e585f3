"""Engine configuration: validation, serialization, layered loading."""

from __future__ import annotations

import json

import pytest

from p3d.config import ENV_PREFIX, EngineConfig, load_config
from p3d.errors import InputError
from p3d.losses import LossWeights
from p3d.optimizer import SolverConfig


def test_defaults():
    cfg = EngineConfig()
    assert cfg.q == 64
    assert cfg.context_dim == 512
    assert cfg.global_dim == 768
    assert cfg.rotation_bins == 24
    assert cfg.box_latent_dim == 48
    assert cfg.rotation_latent_dim == 16
    assert cfg.gcn_layers == 5
    assert cfg.hidden_dim == 512
    assert cfg.shape_code_dim == 1280
    assert cfg.diffusion_steps == 1000
    assert cfg.beta_start == 1e-4
    assert cfg.beta_end == 2e-2
    assert cfg.latent_resolution == 16
    assert cfg.sdf_resolution == 64
    assert cfg.node_dim == 1408


def test_latent_split_must_match_q():
    with pytest.raises(InputError) as exc:
        EngineConfig(box_latent_dim=40, rotation_latent_dim=16)
    assert exc.value.path == "/q"
    # a consistent non-default split is fine
    cfg = EngineConfig(q=32, box_latent_dim=24, rotation_latent_dim=8)
    assert cfg.node_dim == 2 * 32 + 512 + 768


def test_scalar_validation():
    with pytest.raises(InputError):
        EngineConfig(q=0)
    with pytest.raises(InputError):
        EngineConfig(beta_start=0.05, beta_end=0.01)
    with pytest.raises(InputError):
        EngineConfig(port=70000)
    with pytest.raises(InputError):
        EngineConfig(gcn_layers=-1)


def test_to_json_dict_round_trips():
    cfg = EngineConfig(seed=7, port=9001)
    doc = cfg.to_json_dict()
    assert doc["seed"] == 7
    assert doc["solver"]["max_iters"] == cfg.solver.max_iters
    assert doc["loss_weights"]["eta"] == cfg.loss_weights.eta
    # the dict is JSON-serializable as is
    json.dumps(doc)


def test_load_config_defaults_when_empty():
    cfg = load_config(env={})
    assert cfg == EngineConfig()


def test_load_config_file_layer(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 5, "solver": {"max_iters": 123}}))
    cfg = load_config(str(path), env={})
    assert cfg.seed == 5
    assert cfg.solver.max_iters == 123
    assert cfg.q == 64  # untouched fields stay at defaults


def test_env_layer_overrides_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 5, "port": 9000}))
    cfg = load_config(str(path), env={ENV_PREFIX + "SEED": "11"})
    assert cfg.seed == 11  # env wins over the file
    assert cfg.port == 9000  # file survives where env is silent


def test_flags_override_everything(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 5}))
    cfg = load_config(str(path), overrides={"seed": 99}, env={ENV_PREFIX + "SEED": "11"})
    assert cfg.seed == 99


def test_none_overrides_are_ignored():
    cfg = load_config(overrides={"seed": None, "port": 8123}, env={})
    assert cfg.seed == 0
    assert cfg.port == 8123


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"qq": 64}))
    with pytest.raises(InputError) as exc:
        load_config(str(path), env={})
    assert exc.value.path == "/qq"


def test_unknown_solver_key_path(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"solver": {"bogus": 1}}))
    with pytest.raises(InputError) as exc:
        load_config(str(path), env={})
    assert exc.value.path == "/solver/bogus"


def test_bad_file_reports_input_error(tmp_path):
    with pytest.raises(InputError):
        load_config(str(tmp_path / "missing.json"), env={})
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(InputError):
        load_config(str(bad), env={})
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(InputError):
        load_config(str(arr), env={})


def test_type_coercion_from_env():
    cfg = load_config(env={ENV_PREFIX + "BETA_START": "0.0002", ENV_PREFIX + "SEED": "3"})
    assert cfg.beta_start == 0.0002
    assert cfg.seed == 3
    with pytest.raises(InputError):
        load_config(env={ENV_PREFIX + "SEED": "not-a-number"})


def test_bool_not_accepted_as_number(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": True}))
    with pytest.raises(InputError):
        load_config(str(path), env={})


def test_solver_bounds_from_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"solver": {"bounds": [5.0, 4.0, 2.5]}}))
    cfg = load_config(str(path), env={})
    assert cfg.solver.bounds == (5.0, 4.0, 2.5)


def test_loss_weights_layer(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"loss_weights": {"eta": 0.02}}))
    cfg = load_config(str(path), env={})
    assert cfg.loss_weights == LossWeights(eta=0.02)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"loss_weights": {"nope": 1.0}}))
    with pytest.raises(InputError) as exc:
        load_config(str(bad), env={})
    assert exc.value.path == "/loss_weights/nope"


def test_config_is_frozen():
    cfg = EngineConfig()
    with pytest.raises(Exception):
        cfg.seed = 5


def test_nested_defaults_are_fresh_instances():
    a, b = EngineConfig(), EngineConfig()
    assert a.solver == b.solver == SolverConfig()
    assert a.loss_weights == LossWeights()
