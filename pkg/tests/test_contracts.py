import copy
import logging

import pytest

from fission_dynamics.utils.contracts import ContractError, schema_defaults, validate_output

VALID_UNITS = {
    "schemaVersion": "1.0.0",
    "fields": {"time": {"unit": "time", "definition": "Model time of the record."}},
}


def test_validate_units_valid():
    """Should pass for valid data."""
    validate_output(VALID_UNITS, "units")


def test_validate_units_missing_field():
    invalid = copy.deepcopy(VALID_UNITS)
    del invalid["fields"]["time"]["unit"]
    with pytest.raises(ContractError) as excinfo:
        validate_output(invalid, "units")
    assert "Data Contract Violation" in str(excinfo.value)


def test_validate_review_mode_warning(caplog):
    """Should not raise in REVIEW mode, only log a warning."""
    invalid = copy.deepcopy(VALID_UNITS)
    del invalid["schemaVersion"]
    with caplog.at_level(logging.WARNING):
        validate_output(invalid, "units", mode="REVIEW")
    assert "Data Contract Violation (units)" in caplog.text


def test_unknown_schema_is_a_violation():
    with pytest.raises(ContractError):
        validate_output({}, "no_such_schema")


def test_desk_config_matches_schema(desk_config):
    validate_output(desk_config, "run_config")


def test_schema_defaults_per_section():
    defaults = schema_defaults("run_config")
    assert defaults["simulation"]["seed"] == 0
    assert defaults["analytics"]["horizon"] == 5.0
    assert defaults["analytics"]["max_schedule_steps"] == 100_000
    assert defaults["analysis"]["envelope_slack"] == 0.1
    assert "model" not in defaults
