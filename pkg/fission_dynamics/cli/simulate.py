"""
CLI Entry Point: fission-simulate

Runs the configured number of replicas and writes trajectories, the ensemble summary and a manifest.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path
from typing import Sequence

from fission_dynamics.cli.common import add_common_arguments, configure_logging, fail, load_or_exit
from fission_dynamics.errors import FissionDynamicsError
from fission_dynamics.kernels import validate_params
from fission_dynamics.reporting import run_directory, write_ensemble, write_manifest, write_units
from fission_dynamics.run_config import RunConfig
from fission_dynamics.simulator import replicate
from fission_dynamics.utils import console


def run_simulate(config: RunConfig, out: Path) -> Path:
    started = time.perf_counter()
    params = config.model_params()
    report = validate_params(params)
    for message in report.messages:
        console.print_warning(message)

    sim = config.sim_config(params)
    replicas = int(config.simulation["replicas"])
    console.print_step("Simulation")
    ensemble = replicate(sim, params, replicas, workers=int(config.simulation["workers"]))

    directory = run_directory(out, "simulate", config.hash)
    columns = write_ensemble(directory, ensemble)
    write_units(directory, columns)
    write_manifest(
        directory,
        "simulate",
        config.data,
        config.hash,
        sim.seed,
        ensemble.seeds,
        time.perf_counter() - started,
    )

    summary = ensemble.summary()
    rows = [
        (row["time"], row["replicas"], row["mean_population"], row["var_population"], row["extinct"])
        for row in summary["snapshots"]
    ]
    console.print_table("Population by snapshot", ["time", "replicas", "mean N", "var N", "extinct"], rows)
    if summary["guard_trips"]:
        console.print_warning(f"{summary['guard_trips']} replica(s) stopped at the population guard")
    return directory


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Simulate the spatial death/fission process on a torus.")
    add_common_arguments(parser)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    config = load_or_exit(args.config, args.seed)
    try:
        directory = run_simulate(config, args.out)
    except (FissionDynamicsError, ValueError) as e:
        fail(e)
    console.print_success(f"Run written to {directory}")


if __name__ == "__main__":
    main()
