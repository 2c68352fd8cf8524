"""
CLI Entry Point: fission-verify

Runs the quick or full self-check suite and exits with code 3 when any check fails.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path
from typing import Sequence

from fission_dynamics.cli.common import EXIT_VERIFY_FAILED, add_common_arguments, configure_logging, fail
from fission_dynamics.errors import FissionDynamicsError
from fission_dynamics.reporting import run_directory, write_json, write_manifest
from fission_dynamics.run_config import params_hash
from fission_dynamics.utils import console
from fission_dynamics.verification import LEVELS, VerificationReport, run_suite


def print_report(report: VerificationReport) -> None:
    rows = []
    for name, result in report.checks.items():
        first = result.errors[0] if result.errors else (result.warnings[0] if result.warnings else "")
        rows.append((name, "PASS" if result.passed else "FAIL", first))
    console.print_table(f"Verification ({report.level})", ["check", "status", "detail"], rows)


def run_verify(level: str, seed: int, out: Path) -> tuple[VerificationReport, Path]:
    started = time.perf_counter()
    console.print_step(f"Verify: {level}")
    report = run_suite(level, seed)
    settings = {"command": "verify", "level": level, "seed": seed}
    digest = params_hash(settings)
    directory = run_directory(out, "verify", digest)
    write_json(directory / "verification.json", report.as_dict())
    write_manifest(directory, "verify", settings, digest, seed, [], time.perf_counter() - started)
    return report, directory


def main(argv: Sequence[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Run the fission_dynamics self-check suite.")
    parser.add_argument("--level", choices=LEVELS, default="quick", help="quick (default) or full.")
    add_common_arguments(parser, config_required=False)
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    seed = 0 if args.seed is None else args.seed
    try:
        report, directory = run_verify(args.level, seed, args.out)
    except (FissionDynamicsError, ValueError) as e:
        fail(e)
    print_report(report)
    for name, result in report.checks.items():
        for warning in result.warnings:
            console.print_warning(f"{name}: {warning}")
    if not report.passed:
        failed = [name for name, result in report.checks.items() if not result.passed]
        console.print_error(f"Verification failed: {', '.join(failed)} (report in {directory})", exit_code=EXIT_VERIFY_FAILED)
    console.print_success(f"All checks passed (report in {directory})")


if __name__ == "__main__":
    main()
