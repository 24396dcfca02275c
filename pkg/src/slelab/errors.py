"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration and domain misuse
exit 2, numerical failures exit 3, statistically invalid runs exit 4.
"""


class SleLabError(Exception):
    """Base class for all package errors."""


class ParameterError(SleLabError, ValueError):
    """A configuration value is outside its admissible range."""


class DomainError(SleLabError, ValueError):
    """An evaluation point lies outside the function's domain."""


class GeometryError(SleLabError, RuntimeError):
    """Geometric precondition violated (swallowed point, overlap, bad curve)."""


class ConvergenceError(SleLabError, RuntimeError):
    """An iterative numerical procedure failed to converge."""


class IntegrationAbort(SleLabError, RuntimeError):
    """An SDE integration violated an ordering constraint mid-run."""


class StatisticalInvalid(SleLabError, RuntimeError):
    """Too few valid samples for the statistical test to be meaningful."""
