"""Exception types shared across the package."""


class DualpolError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(DualpolError):
    """Input file structure is wrong (bad header, bad block layout)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(DualpolError):
    """A field could not be parsed as the expected type."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(DualpolError):
    """A parsed value violates a documented range or invariant."""


class DuplicateRecordError(DualpolError):
    """Two rows share the same (epoch, prn) key."""


class IncompleteRecordError(DualpolError):
    """An operation needs both C/N0 channels but one is missing."""


class MissingAlmanacError(DualpolError):
    """Observation PRNs that the almanac does not cover."""

    def __init__(self, prns):
        self.prns = sorted(prns)
        super().__init__(f"no almanac entry for PRN(s): {self.prns}")


class KeplerConvergenceError(DualpolError):
    """Kepler solver failed to reach the requested tolerance."""


class DegenerateGeometryError(DualpolError):
    """Geometry is singular (coincident points, zero-length baseline)."""


class GeometryError(DualpolError):
    """Scene geometry is invalid (self-intersection, non-convex footprint)."""


class EmptyCalibrationError(DualpolError):
    """Calibration input produced no occupied elevation bins."""


class InvalidCurveError(DualpolError):
    """Threshold curve has no bins and cannot be queried."""


class JoinError(DualpolError):
    """Decisions and labels could not be joined on (epoch, prn)."""

    def __init__(self, missing_keys):
        self.missing_keys = list(missing_keys)[:10]
        super().__init__(
            "decisions without matching labels (first 10 keys): "
            f"{self.missing_keys}"
        )
