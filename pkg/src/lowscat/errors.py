"""Exception hierarchy.

Two families matter to callers: ``ConfigError`` (bad input, CLI exit code 2)
and ``NumericalError`` (a computation could not be completed, CLI exit code 3).
"""

from __future__ import annotations


class LowscatError(Exception):
    """Base class for all package errors."""


class ConfigError(LowscatError, ValueError):
    """Invalid configuration or arguments."""


class DomainError(ConfigError):
    """Argument outside the domain of an operation (e.g. radius below 1)."""


class AdmissibilityError(ConfigError):
    """Angular data outside the admissible range of the shooting solver."""


class ConeError(ConfigError):
    """Point or segment outside the required outgoing/incoming cone."""


class NumericalError(LowscatError, RuntimeError):
    """A numerical procedure failed."""


class NoTurningPointError(NumericalError):
    """No turning point with radius at least 1 exists."""


class QuadratureError(NumericalError):
    """Quadrature did not reach the requested accuracy."""


class CoreEntryError(NumericalError):
    """An orbit or Taylor segment entered the region |x| < 1."""


class HardyViolationError(NumericalError):
    """The coefficient path violates the Hardy-type lower bound."""


class NonConvergenceError(NumericalError):
    """An iteration failed to converge."""


class CutoffActiveError(NumericalError):
    """The fixed point touches the support of a cutoff; enlarge |x|."""


class NotEscapingError(NumericalError):
    """The trajectory is not an outgoing scattering orbit."""


class NoMatchError(NumericalError):
    """Classification found no matching mixed-problem orbit."""
