import json
from datetime import datetime, timezone

import numpy as np
import pytest

from fission_dynamics import reporting
from fission_dynamics.errors import MissingData
from fission_dynamics.simulator import InitialCondition, SimConfig, replicate
from fission_dynamics.configuration import TorusWindow


def _small_ensemble(params, replicas=3):
    config = SimConfig(
        window=TorusWindow(12.0, 1, params.interaction_radius),
        end_time=0.3,
        initial=InitialCondition("poisson", 1.0),
        seed=21,
        snapshot_times=(0.0, 0.3),
    )
    return replicate(config, params, replicas)


def test_run_directory_layout(tmp_path):
    when = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    path = reporting.run_directory(tmp_path, "simulate", "ab" * 32, now=when)
    assert path == tmp_path / "simulate" / ("ab" * 8 + "_20240102T030405Z")
    assert path.is_dir()


def test_json_writer_handles_numpy(tmp_path):
    target = tmp_path / "x.json"
    reporting.write_json(target, {"n": np.int64(3), "v": np.float64(0.5), "ok": np.bool_(True), "a": np.arange(2)})
    assert json.loads(target.read_text()) == {"a": [0, 1], "n": 3, "ok": True, "v": 0.5}


def test_read_json_missing(tmp_path):
    with pytest.raises(MissingData):
        reporting.read_json(tmp_path / "none.json")


def test_units_need_a_declared_unit(tmp_path):
    with pytest.raises(KeyError):
        reporting.write_units(tmp_path, ["time", "velocity"])
    reporting.write_units(tmp_path, ["time", "n", "time"])
    payload = json.loads((tmp_path / reporting.UNITS).read_text())
    assert sorted(payload["fields"]) == ["n", "time"]
    assert payload["fields"]["time"]["unit"] == "time"


def test_manifest_lists_files(tmp_path, desk_config):
    (tmp_path / "result.csv").write_text("a\n1\n", encoding="utf-8")
    manifest = reporting.write_manifest(tmp_path, "simulate", desk_config, "f" * 64, 7, [1, 2], 0.25)
    assert manifest["files"] == ["result.csv", "manifest.json"]
    assert manifest["seed"] == 7
    on_disk = json.loads((tmp_path / reporting.MANIFEST).read_text())
    assert on_disk["params_hash"] == "f" * 64
    assert on_disk["source_run"] is None


def test_read_snapshots_without_trajectories(tmp_path):
    with pytest.raises(MissingData):
        reporting.read_snapshots(tmp_path, TorusWindow(10.0, 1), [0.0])


@pytest.mark.integration
def test_ensemble_survives_csv(tmp_path, desk_params):
    ensemble = _small_ensemble(desk_params)
    columns = reporting.write_ensemble(tmp_path, ensemble)
    assert set(columns) <= set(reporting.FIELD_UNITS)
    assert len(list(tmp_path.glob("trajectory_*.csv"))) == 3
    assert (tmp_path / "events_00000.csv").exists()

    snapshots = reporting.read_snapshots(tmp_path, ensemble.config.window, ensemble.snapshot_times)
    for k, snap in enumerate(snapshots):
        original = ensemble.snapshot(k)
        assert snap.time == original.time
        assert snap.replicas == original.replicas
        for a, b in zip(snap.configurations, original.configurations):
            assert np.allclose(a, b, rtol=0.0, atol=1e-12)


def test_trajectory_frame_columns(desk_params):
    ensemble = _small_ensemble(desk_params, replicas=1)
    frame = reporting.trajectory_frame(ensemble.trajectories[0], 1)
    assert list(frame.columns) == ["snapshot", "time", "x0"]
    assert set(frame["snapshot"]) <= {0, 1}
