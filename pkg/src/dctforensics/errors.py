"""Exception types shared across the toolkit."""


class ForensicsError(Exception):
    """Base class for all toolkit errors."""


class FormatError(ForensicsError):
    """File is not a decodable PNG/JPEG, or a data file violates its schema."""


class DimensionError(ForensicsError):
    """Image too small for 8x8 tiling."""


class NumericError(ForensicsError):
    """Non-finite values where finite reals are required."""


class BoundsError(ForensicsError):
    """Index outside its valid range."""


class InsufficientDataError(ForensicsError):
    """Too few samples for the requested statistic."""


class ShapeError(ForensicsError):
    """Mismatched array widths or row counts."""


class ContractError(ForensicsError):
    """Operation called on inputs that skip a required preparation step."""


class NoSignalError(ForensicsError):
    """Distance vector is identically zero; no dominant frequency exists."""


class AttackSpecError(ForensicsError):
    """Attack kind/parameter combination outside the supported grid."""


class DataError(ForensicsError):
    """Dataset-level problem: empty input, degenerate labels, unknown label."""


class UsageError(ForensicsError):
    """Bad command-line invocation."""
