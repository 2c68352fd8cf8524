"""
Arguments and error handling shared by every subcommand.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import NoReturn

from fission_dynamics.errors import FissionDynamicsError
from fission_dynamics.run_config import RunConfig, load_config
from fission_dynamics.utils import console
from fission_dynamics.utils.contracts import ContractError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_NO_DATA = 2
EXIT_VERIFY_FAILED = 3


def add_common_arguments(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    parser.add_argument("--config", type=Path, required=config_required, help="Run configuration JSON.")
    parser.add_argument("--out", type=Path, default=Path("runs"), help="Output root (default: runs).")
    parser.add_argument("--seed", type=int, default=None, help="Override simulation.seed from the config.")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level for library messages (default: WARNING).",
    )


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level), format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def fail(error: Exception) -> NoReturn:
    """Report an error and exit with the code its class declares."""
    if isinstance(error, ContractError):
        console.print_error(f"Invalid configuration: {error}", exit_code=EXIT_INTERNAL)
    if isinstance(error, FissionDynamicsError):
        console.print_error(f"{type(error).__name__}: {error}", exit_code=error.exit_code)
    console.print_error(f"Unexpected error: {error}", exit_code=EXIT_INTERNAL)
    raise SystemExit(EXIT_INTERNAL)


def load_or_exit(path: Path, seed: int | None = None) -> RunConfig:
    try:
        config = load_config(path).with_seed(seed)
    except (ContractError, FissionDynamicsError) as e:
        fail(e)
    console.print_success(f"Loaded config: {path}")
    return config
