"""Exception hierarchy. The CLI maps each family to an exit code."""


class QuoteLagError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QuoteLagError):
    """Invalid settings, anchors, or grid parameters."""


class DataError(QuoteLagError):
    """Input data is missing, malformed, or does not cover what is needed."""


class SchemaError(DataError):
    pass


class IngestionError(DataError):
    pass


class CoverageError(DataError):
    pass


class EmptySeriesError(DataError):
    pass


class AlignmentError(DataError):
    pass


class GapError(DataError):
    """Estimation was asked to span a hole in the time grid."""


class DomainError(DataError, ValueError):
    """A numeric argument lies outside the function's domain."""


class RangeError(QuoteLagError, IndexError):
    pass


class EstimationError(QuoteLagError):
    """Base for numerical estimation failures."""


class InsufficientDataError(EstimationError):
    pass


class DegenerateInputError(EstimationError):
    """Zero-variance input where variation is required."""


class CollinearityError(EstimationError):
    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = list(columns or [])


class InstabilityError(EstimationError):
    pass


class PanelError(EstimationError):
    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class UndefinedProportionError(DataError):
    """No account holds a position, so the share in gain is undefined."""
