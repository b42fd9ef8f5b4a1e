"""Exception types shared across the package."""


class RegimecastError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(RegimecastError):
    """A required CSV column is missing or unusable."""


class DuplicateKeyError(RegimecastError):
    """A parsed incident table contains repeated primary keys."""

    def __init__(self, keys):
        self.keys = sorted(keys)
        super().__init__(f"duplicate primary keys: {', '.join(self.keys)}")


class RangeError(RegimecastError):
    """A date, index or boundary falls outside the permitted span."""


class GapError(RegimecastError):
    """A daily series has a hole in its calendar."""


class DomainError(RegimecastError, ValueError):
    """A value violates its domain (negative count, probability outside [0,1], ...)."""


class ParameterError(RegimecastError, ValueError):
    """An operation parameter is out of its allowed range."""


class LengthError(RegimecastError, ValueError):
    """A series or segment is too short for the requested operation."""


class SizeError(RegimecastError, ValueError):
    """An input exceeds a hard size cap, or a split leaves too few rows."""


class EmptySeriesError(RegimecastError, ValueError):
    """An analysis operation received an empty series."""


class DesignError(RegimecastError):
    """A regression design matrix is rank deficient or mislabelled."""


class FlaggedRecordError(RegimecastError):
    """A record with inverted timestamps was used where clean timing is required."""


class ConvergenceError(RegimecastError):
    """Nonlinear estimation exhausted its budget; carries the best fit seen."""

    def __init__(self, message, best_fit=None):
        super().__init__(message)
        self.best_fit = best_fit
