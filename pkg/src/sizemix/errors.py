"""Exception types shared across the package."""


class SizemixError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SizemixError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class MassTooSmall(SizemixError):
    """A truncation window captures negligible probability mass."""


class NotEstimable(SizemixError):
    """No optimizer start converged to a usable maximum."""


class NonFiniteObjective(SizemixError):
    """Every restart of the optimizer stalled at a non-finite objective."""


class SingularInformation(SizemixError):
    """The observed information matrix could not be inverted."""


class RejectionBudget(SizemixError):
    """A rejection sampler exhausted its iteration budget."""


class ZeroDensity(SizemixError):
    """A drift evaluation hit a density below the representable floor."""


class OutOfWindow(SizemixError):
    """A point lies outside the truncation window of a truncated model."""


class EmptyAfterCleaning(SizemixError):
    """CSV ingestion dropped every row."""
