"""Exception types shared across the library.

Each exception carries a stable slug (the first token of its message) so
CLI and report code can map failures to exit codes and diagnostics without
string matching on prose.
"""


class CurveSpaceError(Exception):
    """Base class for all library errors."""

    slug = "error"

    def __init__(self, detail: str = ""):
        msg = self.slug if not detail else f"{self.slug}: {detail}"
        super().__init__(msg)


class InsufficientResolutionError(CurveSpaceError):
    slug = "insufficient-resolution"


class NotAnImmersionError(CurveSpaceError):
    slug = "not-an-immersion"


class GridMismatchError(CurveSpaceError):
    slug = "grid-mismatch"


class DomainViolationError(CurveSpaceError):
    slug = "domain-violation"


class MonotonicityViolationError(CurveSpaceError):
    slug = "monotonicity-violation"


class OrientationMismatchError(CurveSpaceError):
    slug = "orientation-mismatch"


class OverflowGuardError(CurveSpaceError):
    slug = "overflow-guard"


class PathLeftSpaceError(CurveSpaceError):
    slug = "path-left-the-space"


class UnsupportedDimensionError(CurveSpaceError):
    slug = "unsupported-dimension"


class InsufficientRegularityError(CurveSpaceError):
    slug = "insufficient-regularity"


class InapplicableCertificateError(CurveSpaceError):
    slug = "inapplicable-certificate"


class NotASegmentError(CurveSpaceError):
    slug = "not-a-segment"


class DisconnectedComponentsError(CurveSpaceError):
    slug = "disconnected-components"


class ConfigError(CurveSpaceError):
    """Invalid or rejected run configuration (CLI exit code 1)."""

    slug = "config-error"
