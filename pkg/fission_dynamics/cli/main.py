"""
CLI Entry Point: fission-dynamics

Dispatches `fission-dynamics <subcommand> [options]` to the per-subcommand entry points.
"""

from __future__ import annotations

import sys
from typing import Callable, Sequence

from fission_dynamics.cli import analyze, constants, master, simulate, verify

SUBCOMMANDS: dict[str, tuple[Callable[[Sequence[str] | None], None], str]] = {
    "simulate": (simulate.main, "run replicas of the continuum process"),
    "analyze": (analyze.main, "estimate correlation statistics from a simulate run"),
    "master": (master.main, "integrate the discrete-site master equation"),
    "constants": (constants.main, "domination certificate, time bounds and schedule"),
    "verify": (verify.main, "self-check suite (quick or full)"),
}

USAGE = "usage: fission-dynamics {" + ",".join(SUBCOMMANDS) + "} [options]"


def main(argv: Sequence[str] | None = None) -> None:
    args = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print(USAGE)
        for name, (_, summary) in SUBCOMMANDS.items():
            print(f"  {name:<10} {summary}")
        raise SystemExit(0 if args else 1)
    command, rest = args[0], args[1:]
    if command not in SUBCOMMANDS:
        print(f"unknown subcommand {command!r}\n{USAGE}", file=sys.stderr)
        raise SystemExit(1)
    entry, _ = SUBCOMMANDS[command]
    entry(rest)


if __name__ == "__main__":
    main()
