"""
CLI Entry Point: fission-master

Evolves the master equation of the discrete-site model in the config's `master` section and
writes the distribution, the law of N and the moments (including the truncation leak).
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path
from typing import Any, Sequence

from fission_dynamics import master_equation as me
from fission_dynamics.cli.common import add_common_arguments, configure_logging, fail, load_or_exit
from fission_dynamics.errors import ConfigInvalid, FissionDynamicsError
from fission_dynamics.reporting import run_directory, write_frame, write_json, write_manifest, write_units
from fission_dynamics.run_config import RunConfig
from fission_dynamics.utils import console


def moment_report(P: me.DistributionVector, m_max: int, kappa: float) -> dict[str, Any]:
    return {
        "time": P.time,
        "leak": P.leak,
        "total": P.total,
        "chi_moment": me.moments(P, m_max),
        "kappa": kappa,
        "exp_moment": me.exp_moment(P, kappa),
        "audit": P.audit.as_dict(),
    }


def run_master(config: RunConfig, out: Path) -> Path:
    """
    Raises:
        ConfigInvalid: the config has no master section or an inconsistent initial state.
        SizeOverflow: the truncated state space is too large.
        StepTooLarge: the configured dt violates the stability bound.
    """
    started = time.perf_counter()
    section = config.master
    if section is None:
        raise ConfigInvalid("config has no 'master' section")
    space = config.discrete_space()
    initial = config.master_initial()
    ss = me.enumerate_states(space.sites, int(section["n_max"]))

    console.print_step(f"Master equation ({ss.dimension} states)")
    Q = me.build_generator(space, ss)
    dt = section.get("dt")
    P = me.evolve(me.DistributionVector.point_mass(ss, initial), Q, float(section["end_time"]), dt)

    report = moment_report(P, int(section["moment_orders"]), float(section["kappa"]))
    directory = run_directory(out, "master", config.hash)
    write_json(directory / "distribution.json", P.to_json())
    write_frame(directory / "marginal_n.csv", me.marginal_table(P))
    write_json(directory / "moments.json", report)
    write_units(directory, ["time", "n", "probability", "leak", "chi_moment", "exp_moment"])
    write_manifest(
        directory,
        "master",
        config.data,
        config.hash,
        None,
        [],
        time.perf_counter() - started,
    )

    rows = [(m, value) for m, value in enumerate(report["chi_moment"])]
    console.print_table("Moments of (1 + |eta|)", ["m", "value"], rows)
    if P.leak > me.LEAK_WARNING:
        console.print_warning(f"Truncation leak {P.leak:.3e} exceeds {me.LEAK_WARNING:.0e}; raise n_max")
    if P.audit.violations:
        console.print_warning(f"{P.audit.violations} step(s) produced probabilities below -{me.NEGATIVE_TOLERANCE:.0e}")
    return directory


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Integrate the master equation of the discrete-site model.")
    add_common_arguments(parser)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    config = load_or_exit(args.config, args.seed)
    try:
        directory = run_master(config, args.out)
    except (FissionDynamicsError, ValueError) as e:
        fail(e)
    console.print_success(f"Distribution written to {directory}")


if __name__ == "__main__":
    main()
