"""Exception and warning types shared across the package."""


class UStatTestError(Exception):
    """Base class for all errors raised by this package."""


class MatrixIoError(UStatTestError, OSError):
    """A data file is missing or unreadable."""


class CsvParseError(UStatTestError, ValueError):
    """A CSV cell failed to parse, or a row has the wrong width.

    ``row`` and ``column`` are 1-based positions in the file (header
    included in the row count).
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" at row {row}" + (f", column {column}" if column else "")
        super().__init__(message + where)


class ShapeError(UStatTestError, ValueError):
    """Input does not satisfy the minimal shape requirements (n >= 2, p >= 2)."""


class DimensionMismatchError(UStatTestError, ValueError):
    """Two inputs that must agree on a dimension do not."""


class EmptySeriesError(UStatTestError, ValueError):
    """A series operation received an empty series."""


class OrderTooLargeError(UStatTestError, ValueError):
    """Requested statistic order exceeds the sample size."""


class UnsupportedOrderError(UStatTestError, ValueError):
    """No closed form is available for the requested order."""


class SizeGuardError(UStatTestError, ValueError):
    """A brute-force reference path was called on an input too large to enumerate."""


class DegenerateColumnError(UStatTestError, ValueError):
    """Too few non-constant columns remain to form the statistic."""


class DegenerateColumnWarning(UserWarning):
    """Some columns are constant; they carry no dependence information."""


class RegimeWarning(UserWarning):
    """The dimension/sample-size regime is outside the validated range
    for the centered high-order statistic."""


class SingularDesignError(UStatTestError, ValueError):
    """Nuisance design matrix is rank deficient."""


class NonConvergenceError(UStatTestError, RuntimeError):
    """Iterative nuisance fit did not converge (e.g. separated logistic data)."""


class InvalidResponseError(UStatTestError, ValueError):
    """Response vector is incompatible with the requested link."""


class NotPositiveDefiniteError(UStatTestError, ValueError):
    """A covariance model implied by scenario parameters is not positive definite."""


class InvalidParameterError(UStatTestError, ValueError):
    """A configuration value is outside its documented domain."""


class InvalidSparsityError(InvalidParameterError):
    """Sparsity count is outside its admissible range."""


class InvalidDfError(InvalidParameterError):
    """Degrees of freedom must be a positive integer."""


class PTooSmallError(InvalidParameterError):
    """Extreme-value calibration needs p >= 3 so that log log p is positive."""


class ZeroVarianceError(UStatTestError, ValueError):
    """Cannot standardize a statistic whose variance estimate is zero."""


class EmptyPValueSetError(UStatTestError, ValueError):
    """p-value combination received an empty collection."""


class ZeroPValueError(UStatTestError, ValueError):
    """Fisher combination is undefined for an exact zero p-value."""
