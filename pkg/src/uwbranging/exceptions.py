"""Exception types raised across the package."""


class UwbRangingError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(UwbRangingError, ValueError):
    """Input data violates a documented precondition (shape, finiteness, units)."""


class NoSignalDetectedError(UwbRangingError):
    """No PDP sample exceeded the detection threshold (missed detection)."""


class DegenerateSignalError(UwbRangingError):
    """Signal statistics are degenerate (e.g. zero variance) for the requested metric."""


class InsufficientDataError(UwbRangingError):
    """Not enough samples to compute the requested statistic."""


class UndefinedOverlapError(UwbRangingError):
    """Class means coincide, so the overlap metric is undefined."""


class UndefinedCorrelationError(UwbRangingError):
    """One of the sequences has zero variance, so correlation is undefined."""


class DegenerateFitError(UwbRangingError):
    """Model fit is singular (e.g. all regressor values identical)."""


class InvalidProfileError(UwbRangingError, ValueError):
    """Synthetic-channel profile is internally inconsistent or infeasible."""


class ManifestError(UwbRangingError, ValueError):
    """Dataset manifest is malformed, incomplete, or inconsistent."""


class PipelineAbortedError(UwbRangingError):
    """End-to-end run could not proceed (e.g. every record was a missed detection)."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
