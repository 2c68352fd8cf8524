"""
CLI Entry Point: fission-constants

Computes the domination certificate (ω, υ), the time bounds, the growth envelope, the
continuation schedule and the dispersal regime for the configured model, and writes them as
one validated JSON bundle plus the schedule table.
"""

from __future__ import annotations

import argparse
import logging
import math
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from fission_dynamics import analytics
from fission_dynamics.cli.common import EXIT_NO_DATA, add_common_arguments, configure_logging, fail, load_or_exit
from fission_dynamics.errors import FissionDynamicsError, HorizonNotReached, NoAdmissibleR
from fission_dynamics.kernels import validate_params
from fission_dynamics.reporting import run_directory, write_frame, write_json, write_manifest, write_units
from fission_dynamics.run_config import RunConfig
from fission_dynamics.utils import console
from fission_dynamics.utils.contracts import validate_output

logger = logging.getLogger(__name__)

NO_ADMISSIBLE_R_GUIDANCE = (
    "the competition kernel must be strictly positive on a ball around the origin; "
    "give a kernel with positive amplitude near 0 or set analytics.r explicitly"
)
SCHEDULE_COLUMNS = {"T": "T_n", "alpha_star": "alpha_star_n", "alpha": "alpha_n"}


def _theta_exponent(config: RunConfig) -> float:
    """ϑ with e^ϑ = sup|θ| over the configured test functions; 0 (the bound |θ| ≤ 1) when none are given."""
    values = [abs(theta.value) for theta in config.thetas() if theta.value != 0.0]
    return math.log(max(values)) if values else 0.0


def constants_bundle(config: RunConfig, seed: int = 0) -> dict[str, Any]:
    """
    A schedule that stops short of the horizon is kept with `reached` false.

    Raises:
        NoAdmissibleR: a vanishes near the origin.
        RiemannBoundFailed, BadOmega, AlphaTooSmall, BadOrdering,
        ScheduleInvariantBroken: propagated from the analytics routines.
    """
    params = config.model_params()
    section = config.analytics
    consts = params.constants
    validation = validate_params(params)

    cert = analytics.domination_certificate(
        params.competition,
        params.fission,
        epsilon=float(section["epsilon"]),
        r=section["r"],
        h=section["h"],
        omega=section["omega"],
    )
    samples = int(section["samples"])
    check = None
    if samples > 0:
        rng = np.random.default_rng(seed)
        configs = analytics.sample_configurations(
            params.dimension, samples, 30.0, 4.0 * params.interaction_radius, rng
        )
        check = analytics.verify_domination(cert, configs)

    bounds = analytics.time_bounds(
        consts,
        cert.upsilon,
        float(section["alpha1"]),
        float(section["alpha2"]),
        float(section["kappa"]),
        float(section["kappa_prime"]),
    )
    alpha0 = config.alpha0(cert.omega)
    horizon = float(section["horizon"])
    growth = analytics.growth_and_envelope(consts, cert.upsilon, cert.omega, alpha0, horizon)
    max_steps = int(section["max_schedule_steps"])
    try:
        plan = analytics.schedule(alpha0, consts, cert.upsilon, cert.omega, horizon, max_steps=max_steps)
    except HorizonNotReached as e:
        logger.warning("%s; keeping the partial schedule", e)
        plan = e.partial
    regime = analytics.dispersal_regime(params.competition, params.fission)

    kappa_prime = float(section["kappa_prime"])
    alpha2 = float(section["alpha2"])
    extras = {
        "T_kappa_max": analytics.exp_moment_horizon_max(kappa_prime, consts.b_mass),
        "T_generating_functional": analytics.generating_functional_horizon(_theta_exponent(config), consts.b_mass),
        "l_delta_norm": analytics.l_delta_norm_bound(consts, alpha2, float(section["alpha1"])),
        "q_norm_half_horizon": analytics.q_norm_bound(bounds.T, bounds.T / 2.0),
        "derived_constants": consts.as_dict(),
    }

    bundle: dict[str, Any] = {
        "validation": validation.as_dict(),
        "certificate": cert.as_dict(),
        "time_bounds": bounds.as_dict(),
        "growth": growth.as_dict(),
        "schedule": {**plan.as_dict(), "max_steps": max_steps},
        "regime": regime.as_dict(),
        "extras": extras,
    }
    if check is not None:
        bundle["domination_check"] = check._asdict()
    validate_output(bundle, "constants_bundle", mode="STRICT")
    return bundle


def run_constants(config: RunConfig, out: Path) -> Path:
    started = time.perf_counter()
    console.print_step("Constants")
    seed = int(config.simulation["seed"])
    bundle = constants_bundle(config, seed)

    directory = run_directory(out, "constants", config.hash)
    write_json(directory / "constants.json", bundle)
    steps = bundle["schedule"]["steps"]
    frame = pd.DataFrame(steps, columns=list(analytics.ScheduleStep._fields)).rename(columns=SCHEDULE_COLUMNS)
    write_frame(directory / "schedule.csv", frame)
    write_units(directory, ["n", "T_n", "alpha_star_n", "alpha_n", "cumulative", "omega", "upsilon", "delta"])
    write_manifest(directory, "constants", config.data, config.hash, seed, [], time.perf_counter() - started)

    cert = bundle["certificate"]
    bounds = bundle["time_bounds"]
    console.print_table(
        "Certificate and horizons",
        ["quantity", "value"],
        [
            ("omega", cert["omega"]),
            ("upsilon", cert["upsilon"]),
            ("delta", cert["delta"]),
            ("T", bounds["T"]),
            ("T_max(alpha1)", bounds["T_max_alpha1"]),
            ("T(kappa, kappa')", bounds["T_kappa"]),
            ("growth c", bundle["growth"]["c"]),
            ("schedule steps", len(steps)),
            ("regime", bundle["regime"]["tag"]),
        ],
    )
    if not bundle["validation"]["passed"]:
        for message in bundle["validation"]["messages"]:
            console.print_warning(message)
    check = bundle.get("domination_check")
    if check is not None and not check["passed"]:
        console.print_warning(f"Domination inequality failed on {check['violations']} of {check['samples']} samples")
    plan = bundle["schedule"]
    if not plan["reached"]:
        raise HorizonNotReached(
            f"covered {plan['covered']:.6g} of horizon {plan['horizon']:g} in {len(steps)} steps; "
            f"partial schedule written to {directory}",
            {"covered": plan["covered"], "horizon": plan["horizon"], "steps": len(steps), "directory": str(directory)},
        )
    return directory


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Compute the domination certificate, time bounds and schedule.")
    add_common_arguments(parser)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    config = load_or_exit(args.config, args.seed)
    try:
        directory = run_constants(config, args.out)
    except NoAdmissibleR as e:
        console.print_error(f"NoAdmissibleR: {e}\n  Hint: {NO_ADMISSIBLE_R_GUIDANCE}", exit_code=EXIT_NO_DATA)
        return
    except (FissionDynamicsError, ValueError) as e:
        fail(e)
    console.print_success(f"Constants written to {directory}")


if __name__ == "__main__":
    main()
