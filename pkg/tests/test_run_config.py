import json
import math

import pytest

from fission_dynamics.errors import ConfigInvalid, IoFailure
from fission_dynamics.run_config import from_dict, load_config, params_hash
from fission_dynamics.utils.contracts import ContractError


def test_load_fills_defaults(config_file):
    config = load_config(config_file)
    assert config.simulation["max_population"] == 1_000_000
    assert config.simulation["record_events"] is True
    assert config.analysis["ci_sigma"] == 3.0
    assert config.analytics["samples"] == 1000
    assert config.master is not None


def test_missing_optional_sections_are_created(desk_config):
    del desk_config["analysis"]
    del desk_config["master"]
    config = from_dict(desk_config)
    assert config.analysis["bins"] == 20
    assert config.master is None
    with pytest.raises(ConfigInvalid):
        config.discrete_space()


def test_hash_is_stable_and_seed_sensitive(config_file):
    first = load_config(config_file)
    second = load_config(config_file)
    assert first.hash == second.hash
    reseeded = first.with_seed(99)
    assert reseeded.simulation["seed"] == 99
    assert reseeded.hash != first.hash
    assert first.with_seed(None) is first


def test_params_hash_ignores_key_order():
    assert params_hash({"a": 1, "b": [1, 2]}) == params_hash({"b": [1, 2], "a": 1})


def test_unknown_key_rejected(desk_config):
    desk_config["model"]["speed"] = 3.0
    with pytest.raises(ContractError) as excinfo:
        from_dict(desk_config)
    assert "Data Contract Violation" in str(excinfo.value)


def test_missing_model_rejected(desk_config):
    del desk_config["model"]
    with pytest.raises(ContractError):
        from_dict(desk_config)


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_config(tmp_path / "absent.json")


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(IoFailure):
        load_config(path)


def test_model_objects_built(config_file):
    config = load_config(config_file)
    params = config.model_params()
    assert params.dimension == 1
    assert params.constants.b_mass == 1.0
    sim = config.sim_config(params)
    assert sim.window.side == 20.0
    assert sim.snapshot_times == (0.0, 0.25, 0.5)
    assert config.boxes() == [None]
    assert len(config.bin_edges(sim.window)) == 11


def test_tabulated_kernel_read_next_to_config(tmp_path, desk_config):
    (tmp_path / "a.csv").write_text("r,value\n0,1.0\n1.0,0.5\n2.0,0.0\n", encoding="utf-8")
    desk_config["model"]["competition"] = {"shape": "tabulated", "table": "a.csv", "cutoff": 2.0}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(desk_config), encoding="utf-8")
    params = load_config(path).model_params()
    assert params.competition.shape == "tabulated"
    assert float(params.competition.evaluate(0.5)) == pytest.approx(0.75)


def test_tabulated_kernel_file_missing(tmp_path, desk_config):
    desk_config["model"]["competition"] = {"shape": "tabulated", "table": "nowhere.csv", "cutoff": 2.0}
    with pytest.raises(IoFailure):
        from_dict(desk_config, tmp_path).model_params()


def test_tabulated_kernel_without_table(desk_config):
    desk_config["model"]["competition"] = {"shape": "tabulated", "cutoff": 2.0}
    with pytest.raises(ConfigInvalid):
        from_dict(desk_config).model_params()


def test_master_initial_must_match_sites(desk_config):
    desk_config["master"]["initial"] = [1, 0]
    with pytest.raises(ConfigInvalid):
        from_dict(desk_config).master_initial()
    desk_config["master"]["initial"] = [4, 4, 0]
    with pytest.raises(ConfigInvalid):
        from_dict(desk_config).master_initial()


def test_alpha0_defaults_one_above_minus_log_omega(desk_config):
    config = from_dict(desk_config)
    assert config.alpha0(0.5) == pytest.approx(1.0 + math.log(2.0))
    desk_config["analytics"]["alpha0"] = 3.0
    assert from_dict(desk_config).alpha0(0.5) == 3.0
