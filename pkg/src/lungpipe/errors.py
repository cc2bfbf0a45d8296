"""Exception types raised across the pipeline."""


class LungpipeError(Exception):
    """Base class for all library errors."""


class PGMFormatError(LungpipeError, ValueError):
    """Malformed PGM header or unsupported variant."""


class TruncatedImageError(LungpipeError, OSError):
    """PGM payload shorter than the header promises."""


class ManifestError(LungpipeError, ValueError):
    pass


class SegmentationError(LungpipeError):
    """The image does not look like a chest slice (no usable markers)."""


class NoRegionError(LungpipeError, ValueError):
    pass


class DegenerateDistributionError(LungpipeError, ValueError):
    """Zero intensity variance: skewness and kurtosis are undefined.

    ``stddev`` is still available on the exception (always 0.0).
    """

    def __init__(self, message, stddev=0.0):
        super().__init__(message)
        self.stddev = stddev


class DegenerateColumnError(LungpipeError, ValueError):
    def __init__(self, column):
        super().__init__(f"column {column!r} is constant and cannot be standardized")
        self.column = column


class SubsetSizeError(LungpipeError, ValueError):
    pass


class RankError(LungpipeError, ValueError):
    pass


class ConvergenceError(LungpipeError, RuntimeError):
    def __init__(self, message, iterations):
        super().__init__(message)
        self.iterations = iterations


class ConvergenceWarning(UserWarning):
    pass
