"""
CLI Entry Point: fission-analyze

Reads a simulate run directory and writes estimator reports: intensity, pair correlation,
factorial moments and the generating functional for every configured θ.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from fission_dynamics import estimators
from fission_dynamics.analytics import EnvelopePlan, envelope_plan
from fission_dynamics.cli.common import EXIT_NO_DATA, add_common_arguments, configure_logging, fail, load_or_exit
from fission_dynamics.configuration import Snapshot, TorusWindow
from fission_dynamics.errors import EmptyWindow, FissionDynamicsError, MissingData, NoPairs
from fission_dynamics.kernels import ModelParams
from fission_dynamics.reporting import (
    MANIFEST,
    read_json,
    read_snapshots,
    run_directory,
    write_frame,
    write_json,
    write_manifest,
    write_units,
)
from fission_dynamics.run_config import RunConfig, from_dict
from fission_dynamics.utils import console


def _box_label(box: estimators.Box | None) -> str:
    if box is None:
        return "window"
    return "x".join(f"[{lo:g},{hi:g})" for lo, hi in zip(box.lower, box.upper))


def envelope_for(config: RunConfig, params: ModelParams, window: TorusWindow) -> tuple[EnvelopePlan | None, str]:
    """Model envelope κ_t for the run's initial state, or None with the reason it is missing."""
    analysis = config.analysis
    try:
        plan = envelope_plan(
            params,
            config.initial_intensity(window),
            slack=float(analysis["envelope_slack"]),
            epsilon=float(config.analytics["epsilon"]),
        )
    except (FissionDynamicsError, ValueError) as e:
        return None, f"no envelope: {e}"
    return plan, plan.note


def analyze_snapshots(
    snapshots: Sequence[Snapshot], config: RunConfig, envelope: EnvelopePlan | None = None
) -> dict[str, Any]:
    """
    All estimator reports as plain data; problems with one estimate are recorded, not raised.

    Factorial moments are checked against `analysis.envelope_kappa` when set, else against
    envelope.kappa(t) at each snapshot time, else not at all.
    """
    analysis = config.analysis
    m_max = int(analysis["moment_orders"])
    ci_sigma = float(analysis["ci_sigma"])
    override = analysis["envelope_kappa"]
    thetas = config.thetas()
    records: list[dict[str, Any]] = []
    notes: list[str] = []
    for index, snap in enumerate(snapshots):
        edges = config.bin_edges(snap.window)
        if override is not None:
            kappa_t: float | None = float(override)
        else:
            kappa_t = envelope.kappa(snap.time) if envelope is not None else None
        for box in config.boxes():
            label = _box_label(box)
            entry: dict[str, Any] = {"snapshot": index, "time": snap.time, "box": label}
            try:
                entry["intensity"] = vars(estimators.intensity(snap, box))
                entry["factorial_moments"] = estimators.factorial_moments(
                    snap, box, m_max, envelope_kappa=kappa_t, ci_sigma=ci_sigma
                ).as_dict()
            except EmptyWindow as e:
                notes.append(f"t={snap.time:g} {label}: {e}")
                continue
            try:
                entry["pair_correlation"] = estimators.pair_correlation(snap, edges, box).as_dict()
            except (NoPairs, EmptyWindow) as e:
                notes.append(f"t={snap.time:g} {label}: pair correlation skipped ({e})")
            records.append(entry)
        for k, theta in enumerate(thetas):
            records.append(
                {
                    "snapshot": index,
                    "time": snap.time,
                    "theta": k,
                    "bogoliubov": estimators.bogoliubov_functional(snap, theta).as_dict(),
                }
            )
    return {"records": records, "notes": notes}


def report_frames(report: dict[str, Any]) -> dict[str, pd.DataFrame]:
    intensity_rows = []
    pair_rows = []
    moment_rows = []
    theta_rows = []
    for rec in report["records"]:
        key = {"snapshot": rec["snapshot"], "time": rec["time"]}
        if "bogoliubov" in rec:
            est = rec["bogoliubov"]
            theta_rows.append({**key, "theta": rec["theta"], "bogoliubov": est["value"], "stderr": est["stderr"]})
            continue
        box = {"box": rec["box"]}
        i = rec["intensity"]
        intensity_rows.append({**key, **box, "intensity": i["value"], "stderr": i["stderr"], "replicas": i["replicas"]})
        fm = rec["factorial_moments"]
        bounds = fm["envelope"] or [float("nan")] * len(fm["orders"])
        for m, value, se, ref, bound in zip(fm["orders"], fm["moments"], fm["stderr"], fm["poisson_reference"], bounds):
            moment_rows.append(
                {
                    **key,
                    **box,
                    "order": m,
                    "factorial_moment": value,
                    "stderr": se,
                    "poisson_reference": ref,
                    "envelope": bound,
                    "violation": m in fm["violations"],
                }
            )
        if "pair_correlation" in rec:
            pc = rec["pair_correlation"]
            edges = np.asarray(pc["edges"])
            k1 = pc["intensity"]
            for lo, hi, k2, se in zip(edges[:-1], edges[1:], pc["k2"], pc["stderr"]):
                pair_rows.append(
                    {
                        **key,
                        **box,
                        "r_lower": lo,
                        "r_upper": hi,
                        "pair_correlation": k2,
                        "pair_stderr": se,
                        "normalized": k2 / k1**2 if k1 > 0 else float("nan"),
                    }
                )
    return {
        "intensity.csv": pd.DataFrame(intensity_rows),
        "pair_correlation.csv": pd.DataFrame(pair_rows),
        "factorial_moments.csv": pd.DataFrame(moment_rows),
        "bogoliubov.csv": pd.DataFrame(theta_rows),
    }


def run_analyze(run_dir: Path, config: RunConfig | None, out: Path) -> Path:
    """
    Raises:
        MissingData: the run directory has no manifest or no snapshots.
    """
    started = time.perf_counter()
    manifest = read_json(Path(run_dir) / MANIFEST)
    if manifest.get("command") != "simulate":
        raise MissingData(f"{run_dir} is not a simulate run")
    run_config = from_dict(manifest["config"], config.base_dir if config else Path(run_dir))
    if config is not None:
        merged = dict(run_config.data)
        merged["analysis"] = config.analysis
        run_config = RunConfig(merged, run_config.base_dir)

    params = run_config.model_params()
    window = run_config.window(params)
    snapshots = read_snapshots(Path(run_dir), window, run_config.simulation["snapshots"])

    envelope, envelope_note = envelope_for(run_config, params, window)
    console.print_step("Estimators")
    report = analyze_snapshots(snapshots, run_config, envelope)
    report["envelope"] = envelope.as_dict() if envelope is not None else None
    if envelope is None or not envelope.certified:
        report["notes"].append(envelope_note)
    directory = run_directory(out, "analyze", run_config.hash)
    write_json(directory / "analysis.json", report)
    columns = {"snapshot", "time"}
    for name, frame in report_frames(report).items():
        if not frame.empty:
            write_frame(directory / name, frame)
            columns |= set(frame.columns)
    write_units(directory, columns)
    write_manifest(
        directory,
        "analyze",
        run_config.data,
        run_config.hash,
        run_config.simulation["seed"],
        manifest.get("replica_seeds", []),
        time.perf_counter() - started,
        source_run=str(run_dir),
    )
    for note in report["notes"]:
        console.print_warning(note)
    return directory


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Estimate correlation statistics from a simulate run.")
    parser.add_argument("--run-dir", type=Path, required=True, help="Directory written by fission-simulate.")
    add_common_arguments(parser, config_required=False)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    config = load_or_exit(args.config) if args.config else None
    try:
        directory = run_analyze(args.run_dir, config, args.out)
    except MissingData as e:
        args.out.mkdir(parents=True, exist_ok=True)
        write_json(args.out / "no_data.json", {"status": "NoData", "run_dir": str(args.run_dir), "reason": str(e)})
        console.print_error(f"NoData: {e}", exit_code=EXIT_NO_DATA)
        return
    except (FissionDynamicsError, ValueError) as e:
        fail(e)
    console.print_success(f"Reports written to {directory}")


if __name__ == "__main__":
    main()
