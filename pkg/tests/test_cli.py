import json
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from fission_dynamics.cli.analyze import main as analyze_main
from fission_dynamics.cli.constants import main as constants_main
from fission_dynamics.cli.main import main as dispatch_main
from fission_dynamics.cli.master import main as master_main
from fission_dynamics.cli.simulate import main as simulate_main
from fission_dynamics.cli.verify import main as verify_main
from fission_dynamics.verification import CheckResult, VerificationReport


def _only_run(root: Path, command: str) -> Path:
    runs = sorted((root / command).iterdir())
    assert len(runs) == 1
    return runs[0]


def _simulate(config_file: Path, out: Path) -> Path:
    with patch("sys.argv", ["fission-simulate", "--config", str(config_file), "--out", str(out)]):
        simulate_main()
    return _only_run(out, "simulate")


@pytest.mark.e2e
def test_simulate_writes_trajectories_and_manifest(config_file, tmp_path, capsys):
    run = _simulate(config_file, tmp_path / "runs")

    assert len(list(run.glob("trajectory_*.csv"))) == 4
    manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 7
    assert len(manifest["replica_seeds"]) == 4
    assert "units.json" in manifest["files"]
    assert "Population by snapshot" in capsys.readouterr().out


@pytest.mark.e2e
def test_simulate_seed_override(config_file, tmp_path):
    out = tmp_path / "runs"
    with patch("sys.argv", ["fission-simulate", "--config", str(config_file), "--out", str(out), "--seed", "3"]):
        simulate_main()
    manifest = json.loads((_only_run(out, "simulate") / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 3


@pytest.mark.e2e
def test_analyze_reads_a_simulate_run(config_file, tmp_path):
    out = tmp_path / "runs"
    run = _simulate(config_file, out)

    analyze_main(["--run-dir", str(run), "--out", str(out)])

    report_dir = _only_run(out, "analyze")
    intensity = pd.read_csv(report_dir / "intensity.csv")
    assert list(intensity["time"]) == [0.0, 0.25, 0.5]
    assert (intensity["replicas"] == 4).all()
    moments = pd.read_csv(report_dir / "factorial_moments.csv")
    assert set(moments["order"]) == {1, 2, 3}
    manifest = json.loads((report_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["source_run"] == str(run)
    units = json.loads((report_dir / "units.json").read_text(encoding="utf-8"))
    assert "intensity" in units["fields"]


@pytest.mark.e2e
def test_analyze_checks_moments_against_model_envelope(config_file, tmp_path):
    out = tmp_path / "runs"
    run = _simulate(config_file, out)

    analyze_main(["--run-dir", str(run), "--out", str(out)])

    report_dir = _only_run(out, "analyze")
    report = json.loads((report_dir / "analysis.json").read_text(encoding="utf-8"))
    envelope = report["envelope"]
    assert envelope["certified"] is True
    assert envelope["slack"] == 0.1
    moments = pd.read_csv(report_dir / "factorial_moments.csv")
    kappa_t = np.exp(envelope["alpha0"] + envelope["c"] * moments["time"])
    assert np.allclose(moments["envelope"], (kappa_t * 20.0) ** moments["order"], rtol=1e-9)
    assert not moments["violation"].any()
    assert "poisson_reference" in moments.columns


@pytest.mark.e2e
def test_analyze_empty_directory_reports_no_data(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    out = tmp_path / "runs"

    with pytest.raises(SystemExit) as excinfo:
        analyze_main(["--run-dir", str(empty), "--out", str(out)])

    assert excinfo.value.code == 2
    payload = json.loads((out / "no_data.json").read_text(encoding="utf-8"))
    assert payload["status"] == "NoData"
    assert "NoData" in capsys.readouterr().out


@pytest.mark.e2e
def test_master_writes_distribution(config_file, tmp_path):
    out = tmp_path / "runs"
    master_main(["--config", str(config_file), "--out", str(out)])

    run = _only_run(out, "master")
    distribution = json.loads((run / "distribution.json").read_text(encoding="utf-8"))
    assert distribution["total"] == pytest.approx(1.0, abs=1e-9)
    law = pd.read_csv(run / "marginal_n.csv")
    assert list(law["n"]) == list(range(7))
    moments = json.loads((run / "moments.json").read_text(encoding="utf-8"))
    assert moments["chi_moment"][0] == pytest.approx(1.0 - moments["leak"], abs=1e-9)


@pytest.mark.e2e
def test_constants_writes_bundle_and_schedule(config_file, tmp_path):
    out = tmp_path / "runs"
    constants_main(["--config", str(config_file), "--out", str(out)])

    run = _only_run(out, "constants")
    bundle = json.loads((run / "constants.json").read_text(encoding="utf-8"))
    assert bundle["certificate"]["omega"] > 0.0
    assert bundle["domination_check"]["passed"] is True
    assert bundle["regime"]["tag"] == "long"
    schedule = pd.read_csv(run / "schedule.csv")
    assert list(schedule.columns) == ["n", "T_n", "alpha_star_n", "alpha_n", "cumulative"]
    assert schedule["cumulative"].iloc[-1] >= 1.0


@pytest.mark.e2e
def test_constants_short_schedule_reports_covered_time(tmp_path, desk_config, capsys):
    desk_config["analytics"].update({"horizon": 5.0, "max_schedule_steps": 50})
    path = tmp_path / "far.json"
    path.write_text(json.dumps(desk_config), encoding="utf-8")
    out = tmp_path / "runs"

    with pytest.raises(SystemExit) as excinfo:
        constants_main(["--config", str(path), "--out", str(out)])

    assert excinfo.value.code == 2
    printed = " ".join(capsys.readouterr().out.split())
    assert "HorizonNotReached" in printed
    assert "of horizon 5 in 50 steps" in printed
    bundle = json.loads((_only_run(out, "constants") / "constants.json").read_text(encoding="utf-8"))
    assert bundle["schedule"]["reached"] is False
    assert bundle["schedule"]["max_steps"] == 50
    assert 0.0 < bundle["schedule"]["covered"] < 5.0
    assert len(pd.read_csv(_only_run(out, "constants") / "schedule.csv")) == 50


@pytest.mark.e2e
def test_constants_without_competition_exits_2(tmp_path, desk_config, capsys):
    desk_config["model"]["competition"]["amplitude"] = 0.0
    path = tmp_path / "flat.json"
    path.write_text(json.dumps(desk_config), encoding="utf-8")

    with pytest.raises(SystemExit) as excinfo:
        constants_main(["--config", str(path), "--out", str(tmp_path / "runs")])

    assert excinfo.value.code == 2
    assert "NoAdmissibleR" in capsys.readouterr().out


@pytest.mark.e2e
def test_invalid_config_exits_1(tmp_path, desk_config):
    desk_config["simulation"]["colour"] = "blue"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(desk_config), encoding="utf-8")
    with pytest.raises(SystemExit) as excinfo:
        simulate_main(["--config", str(path), "--out", str(tmp_path / "runs")])
    assert excinfo.value.code == 1


@pytest.mark.e2e
def test_verify_quick_passes(tmp_path, capsys):
    verify_main(["--level", "quick", "--out", str(tmp_path / "runs")])

    run = _only_run(tmp_path / "runs", "verify")
    report = json.loads((run / "verification.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    assert "All checks passed" in capsys.readouterr().out


@pytest.mark.e2e
def test_verify_failure_exits_3(tmp_path, mocker):
    failing = VerificationReport("quick", {"duality": CheckResult(False, ["duality residual 1e-3"], [])})
    mocker.patch("fission_dynamics.cli.verify.run_suite", return_value=failing)

    with pytest.raises(SystemExit) as excinfo:
        verify_main(["--out", str(tmp_path / "runs")])

    assert excinfo.value.code == 3


def test_dispatcher_usage(capsys):
    with pytest.raises(SystemExit) as excinfo:
        dispatch_main([])
    assert excinfo.value.code == 1
    assert "usage: fission-dynamics" in capsys.readouterr().out

    with pytest.raises(SystemExit) as excinfo:
        dispatch_main(["--help"])
    assert excinfo.value.code == 0


def test_dispatcher_unknown_command(capsys):
    with pytest.raises(SystemExit) as excinfo:
        dispatch_main(["plot"])
    assert excinfo.value.code == 1
    assert "unknown subcommand" in capsys.readouterr().err


def test_dispatcher_forwards_arguments(mocker):
    entry = mocker.Mock()
    mocker.patch.dict("fission_dynamics.cli.main.SUBCOMMANDS", {"master": (entry, "stub")})
    dispatch_main(["master", "--config", "run.json"])
    entry.assert_called_once_with(["--config", "run.json"])
