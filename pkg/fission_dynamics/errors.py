"""
Exception hierarchy for fission_dynamics.

Every error raised on purpose by the library derives from FissionDynamicsError so the CLI can
map it to an exit code without catching unrelated exceptions.
"""

from __future__ import annotations

from typing import Any


class FissionDynamicsError(Exception):
    """Base class for all library errors."""

    exit_code = 1


# kernels
class NonFiniteMass(FissionDynamicsError):
    """A kernel integrates to a non-finite value."""


class NegativeKernel(FissionDynamicsError):
    """A kernel takes a negative value somewhere."""


class MissingCutoff(FissionDynamicsError):
    """A tabulated kernel was declared without a support radius."""


class SamplerExhausted(FissionDynamicsError):
    """Rejection sampling of an offspring pair hit its proposal cap."""


# configuration
class OutOfWindow(FissionDynamicsError):
    """A point lies outside the periodic window."""


class BadIndex(FissionDynamicsError):
    """A particle index does not exist in the configuration."""


# simulator
class EmptyConfiguration(FissionDynamicsError):
    """An event was requested from a configuration without particles."""


class GuardTripped(FissionDynamicsError):
    """The population guard stopped a run before its end time."""

    def __init__(self, message: str, trajectory: Any = None) -> None:
        super().__init__(message)
        self.trajectory = trajectory


# estimators
class EmptyWindow(FissionDynamicsError):
    """The estimation box has zero volume or lies outside the window."""

    exit_code = 2


class NoPairs(FissionDynamicsError):
    """No replica contains two particles, so no pair statistic exists."""

    exit_code = 2


# gamma0 oracle / master equation
class TruncationOverflow(FissionDynamicsError):
    """An operator needs table entries above the size the table is defined for."""


class SizeOverflow(FissionDynamicsError):
    """The truncated state space would exceed the enumeration cap."""


class StepTooLarge(FissionDynamicsError):
    """The integration step violates dt * max|Q_ii| <= 0.5."""


# analytics
class OutOfDomain(FissionDynamicsError):
    """Argument below the branch point -1/e of the Lambert function."""


class BadOrdering(FissionDynamicsError):
    """Scale parameters are not strictly ordered as required."""


class NoAdmissibleR(FissionDynamicsError):
    """No tried radius gives a strictly positive competition lower bound a_r."""

    exit_code = 2


class RiemannBoundFailed(FissionDynamicsError):
    """The upper Riemann sum of beta never came within <b> + epsilon."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BadOmega(FissionDynamicsError):
    """omega is outside its admissible interval."""


class AlphaTooSmall(FissionDynamicsError):
    """alpha0 does not exceed -log(omega)."""


class HorizonNotReached(FissionDynamicsError):
    """The continuation schedule hit its iteration cap before covering the horizon."""

    exit_code = 2

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None, partial: Any = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        self.partial = partial


class ScheduleInvariantBroken(FissionDynamicsError):
    """alpha*_n >= alpha_n at some schedule step."""


# cli
class MissingData(FissionDynamicsError):
    """A run directory lacks the files a subcommand needs."""

    exit_code = 2


class ConfigInvalid(FissionDynamicsError):
    """The run configuration is malformed or inconsistent."""


class IoFailure(FissionDynamicsError):
    """Reading or writing an output file failed."""
