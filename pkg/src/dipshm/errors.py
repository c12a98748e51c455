"""Exception hierarchy.

Validation failures (bad inputs, bad config, malformed files) derive from
ValueError; numeric/runtime failures derive from RuntimeError. The CLI maps
the former to exit code 1 and the latter to exit code 2.
"""


class DipError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModelError(DipError, ValueError):
    """Building model violates its invariants (non-positive mass/stiffness, bad damping)."""


class DegenerateScenarioError(DipError, ValueError):
    """Deterioration scenario removes all stiffness (adr * years >= 1) or is otherwise unusable."""


class InsufficientDataError(DipError, ValueError):
    """Simulation or dataset too short for the requested record count."""


class IntegrationError(DipError, RuntimeError):
    """Time integration produced non-finite states."""


class DegenerateSignalError(DipError, ValueError):
    """Signal has zero variance and cannot be standardized."""


class ShapeError(DipError, ValueError):
    """Array dimensions do not match the operation's contract."""


class NumericError(DipError, RuntimeError):
    """Non-finite values where finite ones are required."""


class StratificationError(DipError, ValueError):
    """A class is too small for the requested fold count."""


class TrainingError(DipError, RuntimeError):
    """Training diverged; carries the epoch at which it happened."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ConfigError(DipError, ValueError):
    """Unknown key, missing section, or out-of-range value in a run configuration."""


class ContainerFormatError(DipError, ValueError):
    """Malformed DIPD/DIPW container (bad magic, version, or truncated payload)."""
