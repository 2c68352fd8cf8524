"""
Output directories, manifests, unit sidecars and table writers.

Numeric outputs are written with sorted keys and without timestamps, so rerunning a config gives
byte-identical files; only manifest.json carries the clock.
"""

from __future__ import annotations

import json
import logging
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
import scipy

from fission_dynamics.errors import IoFailure, MissingData
from fission_dynamics.configuration import Snapshot, TorusWindow
from fission_dynamics.simulator import Ensemble, Trajectory
from fission_dynamics.utils.contracts import validate_output

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0.0"
MANIFEST = "manifest.json"
UNITS = "units.json"
ENSEMBLE = "ensemble.json"

# unit, definition
FIELD_UNITS: dict[str, tuple[str, str]] = {
    "time": ("time", "Model time of the record."),
    "snapshot": ("index", "Position of the snapshot time in the configured list."),
    "x0": ("length", "First coordinate on the torus [0, L)."),
    "x1": ("length", "Second coordinate on the torus [0, L)."),
    "x2": ("length", "Third coordinate on the torus [0, L)."),
    "kind": ("label", "Event kind: death, fission or null (mollifier rejection)."),
    "population": ("count", "Number of particles after the event."),
    "replicas": ("count", "Number of replicas contributing."),
    "mean_population": ("count", "Replica mean of the window population N."),
    "var_population": ("count^2", "Unbiased replica variance of N."),
    "mean_intensity": ("1/length^d", "Mean population divided by the window volume."),
    "extinct": ("count", "Replicas with no particle left at the snapshot time."),
    "intensity": ("1/length^d", "Estimated first correlation function (intensity) on the box."),
    "r_lower": ("length", "Lower edge of a distance bin."),
    "r_upper": ("length", "Upper edge of a distance bin."),
    "pair_correlation": ("1/length^(2d)", "Estimated second correlation function k^(2) on the bin."),
    "normalized": ("1", "k^(2) divided by the squared intensity."),
    "pair_stderr": ("1/length^(2d)", "Standard error of k^(2) over replicas."),
    "factorial_moment": ("count^m", "E[N(N-1)...(N-m+1)] for the box count N."),
    "poisson_reference": ("count^m", "(estimated intensity times box volume)^m."),
    "envelope": ("count^m", "(kappa_t times box volume)^m from the model envelope; empty when none applies."),
    "violation": ("1", "True when the moment exceeds the envelope by more than ci_sigma standard errors."),
    "bogoliubov": ("1", "Replica mean of the product of (1 + theta(x)) over particles."),
    "box": ("label", "Estimation box as [lower,upper) per axis, or window."),
    "theta": ("index", "Position of the test function in analysis.theta."),
    "order": ("1", "Factorial moment order m."),
    "stderr": ("same as estimate", "Standard error of the estimate on the same row over replicas."),
    "n": ("count", "Number of particles |eta|."),
    "probability": ("1", "Probability mass."),
    "leak": ("1", "Probability absorbed by the truncation sink."),
    "chi_moment": ("1", "Sum of (1 + |eta|)^m P(eta), sink excluded."),
    "exp_moment": ("1", "Sum of exp(kappa |eta|) P(eta), sink excluded."),
    "T_n": ("time", "Length of continuation step n."),
    "alpha_star_n": ("1", "Norm index reached after step n."),
    "alpha_n": ("1", "Target norm index of step n."),
    "cumulative": ("time", "Partial sum of step lengths."),
    "omega": ("1", "Domination factor in a >= omega beta up to the linear correction."),
    "upsilon": ("1/time", "Linear correction rate of the domination inequality."),
    "delta": ("1/time", "Max of beta* and the packed Riemann bound."),
}


def run_directory(out: Path, command: str, config_hash: str, now: datetime | None = None) -> Path:
    """`<out>/<command>/<hash16>_<UTC yyyymmddTHHMMSSZ>/`, created."""
    stamp = (now or datetime.now(timezone.utc)).strftime("%Y%m%dT%H%M%SZ")
    path = Path(out) / command / f"{config_hash[:16]}_{stamp}"
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create output directory {path}: {e}") from e
    return path


def write_json(path: Path, payload: Any) -> None:
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise MissingData(f"missing file: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise IoFailure(f"cannot read {path}: {e}") from e


def _json_default(value: Any) -> Any:
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_frame(path: Path, frame: pd.DataFrame) -> None:
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def versions() -> dict[str, str]:
    try:
        own = metadata.version("project-fission-dynamics")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {
        "fission_dynamics": own,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def write_units(directory: Path, fields: Iterable[str]) -> None:
    """Sidecar listing unit and definition for every written column."""
    wanted = sorted(set(fields))
    unknown = [f for f in wanted if f not in FIELD_UNITS]
    if unknown:
        raise KeyError(f"no unit declared for {unknown}")
    payload = {
        "schemaVersion": SCHEMA_VERSION,
        "fields": {f: {"unit": FIELD_UNITS[f][0], "definition": FIELD_UNITS[f][1]} for f in wanted},
    }
    validate_output(payload, "units", mode="STRICT")
    write_json(directory / UNITS, payload)


def write_manifest(
    directory: Path,
    command: str,
    config: Mapping[str, Any],
    config_hash: str,
    seed: int | None,
    replica_seeds: Sequence[int],
    wall_seconds: float,
    source_run: str | None = None,
) -> dict[str, Any]:
    files = sorted(p.name for p in directory.iterdir() if p.is_file() and p.name != MANIFEST)
    manifest = {
        "schemaVersion": SCHEMA_VERSION,
        "command": command,
        "params_hash": config_hash,
        "seed": seed,
        "replica_seeds": [int(s) for s in replica_seeds],
        "config": dict(config),
        "source_run": source_run,
        "versions": versions(),
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "wall_seconds": float(wall_seconds),
        },
        "files": files + [MANIFEST],
    }
    validate_output(manifest, "manifest", mode="STRICT")
    write_json(directory / MANIFEST, manifest)
    logger.info(f"wrote manifest for {command} into {directory}")
    return manifest


# ----------------------------------------------------------------------------- trajectories
def _coordinate_columns(d: int) -> list[str]:
    return [f"x{i}" for i in range(d)]


def trajectory_frame(trajectory: Trajectory, d: int) -> pd.DataFrame:
    """One row per particle per snapshot."""
    rows = [
        (k, t, *point)
        for k, (t, points) in enumerate(trajectory.snapshots)
        for point in np.asarray(points).reshape(-1, d)
    ]
    return pd.DataFrame(rows, columns=["snapshot", "time", *_coordinate_columns(d)])


def events_frame(trajectory: Trajectory, d: int) -> pd.DataFrame:
    rows = [(e.time, e.kind, e.population, *np.asarray(e.parent).reshape(d)) for e in trajectory.events]
    return pd.DataFrame(rows, columns=["time", "kind", "population", *_coordinate_columns(d)])


def write_ensemble(directory: Path, ensemble: Ensemble) -> list[str]:
    """Trajectory CSVs (and event CSVs when recorded) plus the ensemble summary; returns the columns written."""
    d = ensemble.config.window.dimension
    width = max(5, len(str(len(ensemble))))
    for i, trajectory in enumerate(ensemble.trajectories):
        write_frame(directory / f"trajectory_{i:0{width}d}.csv", trajectory_frame(trajectory, d))
        if ensemble.config.record_events:
            write_frame(directory / f"events_{i:0{width}d}.csv", events_frame(trajectory, d))
    write_json(directory / ENSEMBLE, ensemble.summary())
    columns = ["snapshot", "time", *_coordinate_columns(d), "replicas", "mean_population", "var_population"]
    columns += ["mean_intensity", "extinct"]
    if ensemble.config.record_events:
        columns += ["kind", "population"]
    return columns


def read_snapshots(run_dir: Path, window: TorusWindow, times: Sequence[float]) -> list[Snapshot]:
    """
    Rebuild one Snapshot per configured time from the trajectory CSVs of a simulate run.

    Raises:
        MissingData: no snapshot times or no trajectory files.
    """
    files = sorted(Path(run_dir).glob("trajectory_*.csv"))
    if not times or not files:
        raise MissingData(f"no snapshots in {run_dir} (times: {len(times)}, trajectories: {len(files)})")
    d = window.dimension
    columns = _coordinate_columns(d)
    per_time: list[list[np.ndarray]] = [[] for _ in times]
    for path in files:
        frame = pd.read_csv(path)
        for k in range(len(times)):
            rows = frame[frame["snapshot"] == k]
            per_time[k].append(rows[columns].to_numpy(dtype=np.float64).reshape(-1, d))
    return [Snapshot(float(t), window, tuple(configs)) for t, configs in zip(times, per_time)]
