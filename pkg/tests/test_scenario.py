"""Scenario documents: validation, overrides, loading and round trips."""
import json
import os

import pytest

from models.errors import ConfigError
from models.scenario import (
    apply_overrides,
    dict_to_scenario,
    hyper_to_fragment,
    load_config,
    scenario_hash,
    scenario_to_dict,
    validate_config,
)
from tests.conftest import SCENARIOS_DIR


def _write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


@pytest.mark.parametrize("name", ["controlled-synthetic.json", "mobility-synthetic.json"])
def test_bundled_synthetic_scenarios_validate(name):
    with open(os.path.join(SCENARIOS_DIR, name), encoding="utf-8") as fh:
        assert validate_config(json.load(fh)) == []


def test_small_documents_validate(controlled_doc, mobility_doc):
    assert validate_config(controlled_doc) == []
    assert validate_config(mobility_doc) == []


def test_errors_name_dotted_fields(controlled_doc):
    controlled_doc["strategy"] = "gossip"
    controlled_doc["hyper"]["tau"] = 1.5
    controlled_doc["hyper"]["momentum"] = 0.9
    controlled_doc["controlled"]["goal_labels"] = [0, 11]
    controlled_doc["schema_version"] = 2
    errors = validate_config(controlled_doc)
    fields = {e.split(":")[0] for e in errors}
    assert {"strategy", "hyper.tau", "hyper.momentum", "controlled.goal_labels", "schema_version"} <= fields


def test_missing_idx_files_are_reported(tmp_path, controlled_doc, monkeypatch):
    monkeypatch.setenv("OPPFL_DATA_DIR", str(tmp_path))
    controlled_doc["dataset"] = {
        "kind": "idx",
        "train_images": "a", "train_labels": "b", "test_images": "c", "test_labels": "d",
    }
    errors = validate_config(controlled_doc)
    assert any(e.startswith("dataset.train_images: file not found") for e in errors)


def test_comm_range_must_fit_in_a_region(mobility_doc):
    mobility_doc["mobility"]["comm_range"] = 120.0
    assert any(e.startswith("mobility.comm_range") for e in validate_config(mobility_doc))


def test_bad_phase_reported(controlled_doc):
    controlled_doc["controlled"]["phases"][1]["encounters"] = 0
    controlled_doc["controlled"]["phases"][2]["shuffle"] = True
    errors = validate_config(controlled_doc)
    assert "controlled.phases[1].encounters: must be a positive integer" in errors
    assert "controlled.phases[2].shuffle: unknown key" in errors


def test_round_trip_through_dict(controlled_doc, mobility_doc):
    for doc in (controlled_doc, mobility_doc):
        scenario = dict_to_scenario(doc)
        emitted = scenario_to_dict(scenario)
        assert validate_config(emitted) == []
        assert dict_to_scenario(json.loads(json.dumps(emitted))) == scenario


def test_lambda_maps_to_hyperparameters(controlled_doc):
    controlled_doc["hyper"]["lambda"] = 2.5
    scenario = dict_to_scenario(controlled_doc)
    assert scenario.hyper.lam == 2.5
    assert hyper_to_fragment(scenario.hyper)["hyper"]["lambda"] == 2.5


def test_overrides_parse_json_with_string_fallback(controlled_doc):
    result = apply_overrides(controlled_doc, ["hyper.eta=0.3", "strategy=greedy-sim", "model.hidden_dims=[4,4]"])
    assert result["hyper"]["eta"] == 0.3
    assert result["strategy"] == "greedy-sim"
    assert result["model"]["hidden_dims"] == [4, 4]
    assert controlled_doc["hyper"]["eta"] == 0.1


def test_malformed_override(controlled_doc):
    with pytest.raises(ConfigError):
        apply_overrides(controlled_doc, ["hyper.eta"])
    with pytest.raises(ConfigError):
        apply_overrides(controlled_doc, ["name.inner=1"])


def test_load_config_reports_field_and_line(tmp_path, controlled_doc):
    controlled_doc["hyper"]["rho"] = 0
    path = _write(tmp_path, controlled_doc)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    err = info.value
    assert err.field == "hyper.rho"
    assert err.line is not None
    assert '"rho"' in path.read_text().splitlines()[err.line - 1]


def test_load_config_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  oops\n}', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 3


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_load_config_applies_overrides(tmp_path, controlled_doc):
    path = _write(tmp_path, controlled_doc)
    scenario = load_config(path, ["seed=11", "strategy=local"])
    assert scenario.seed == 11
    assert scenario.strategy == "local"


def test_scenario_hash_tracks_content(controlled_doc):
    a = dict_to_scenario(controlled_doc)
    controlled_doc["seed"] = 99
    b = dict_to_scenario(controlled_doc)
    assert scenario_hash(a) == scenario_hash(dict_to_scenario(scenario_to_dict(a)))
    assert scenario_hash(a) != scenario_hash(b)
    assert len(scenario_hash(a)) == 64
