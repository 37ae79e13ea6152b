"""Exception hierarchy and the CLI exit codes attached to it."""

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class DecoyKitError(Exception):
    """Base class for all package errors."""

    exit_code = EXIT_VALIDATION


class ParameterError(DecoyKitError, ValueError):
    """Invalid input value or a violated protocol constraint."""

    exit_code = EXIT_VALIDATION


class OrderingError(ParameterError):
    """Source pair violates, or leaves undefined, the coefficient-ratio ordering."""


class InfeasibleStatisticsError(DecoyKitError):
    """Observed data too sparse or mutually inconsistent to support a bound."""

    exit_code = EXIT_INFEASIBLE


class AnalysisInfeasibleError(InfeasibleStatisticsError):
    """No usable source pair is available for the requested bound."""


class ErrorRateUnboundedError(InfeasibleStatisticsError):
    """Single-photon error rate cannot be bounded because the yield bound is zero.

    Callers treat the affected key-rate contribution as zero.
    """
