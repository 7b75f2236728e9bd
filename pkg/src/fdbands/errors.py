"""Exception taxonomy shared across the package.

Every error raised deliberately by fdbands derives from FdbandsError, so
callers (and the CLI) can distinguish library failures from genuine bugs.
"""


class FdbandsError(Exception):
    """Base class for all fdbands errors."""


class ConfigError(FdbandsError):
    """Invalid configuration: unknown names, bad values, malformed config file."""


# --- data containers -------------------------------------------------------

class NonIncreasingGrid(FdbandsError):
    """Grid coordinates are not strictly increasing (or too short)."""


class NonFiniteValue(FdbandsError):
    """A value that must be finite is NaN or infinite."""


class TooFewCurves(FdbandsError):
    """Sample contains fewer than two curves."""


class ShapeMismatch(FdbandsError):
    """Array dimensions disagree with the expected layout."""


class ParseError(FdbandsError):
    """A cell of a CSV file could not be parsed as a number."""


# --- numerics --------------------------------------------------------------

class DomainError(FdbandsError):
    """Argument outside the supported domain of a special function."""


class NotPositiveDefinite(FdbandsError):
    """Matrix could not be factorized even at the maximum jitter."""


class DomainGuardViolation(FdbandsError):
    """A statistic was evaluated where its defining transformation is singular."""


class SampleTooSmall(FdbandsError):
    """Sample size below the minimum required by a statistic or formula."""


class ZeroSe(FdbandsError):
    """Standard error vanished at some grid point where a positive value is required."""


class DegenerateResiduals(FdbandsError):
    """All residual curves are identically zero."""


class NoRoot(FdbandsError):
    """Threshold equation has no solution on the monotone branch."""


class DegreeOutOfRange(FdbandsError):
    """Polynomial degree outside the supported range."""


class UnsupportedOrder(FdbandsError):
    """Moment order beyond what the implementation supports."""


class NotAvailable(FdbandsError):
    """No closed form is available for the requested quantity."""
