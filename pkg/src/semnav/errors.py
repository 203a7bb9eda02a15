"""Exception types shared across the package."""


class SemnavError(Exception):
    """Base class for all package-specific errors."""


class InvalidDepthError(SemnavError):
    """Depth value is non-positive, NaN, or beyond the configured maximum."""


class NoValidPointsError(SemnavError):
    """An operation that needs at least one valid depth point received none."""


class EmptyMapError(SemnavError):
    """The occupancy grid cannot be built from empty navigable and obstacle clouds."""


class GridBoundsError(SemnavError):
    """A grid cell index lies outside the occupancy grid."""


class UnknownNodeError(SemnavError):
    """A node id does not resolve to any live or merged node."""


class EmptyTargetSetError(SemnavError):
    """Normalized affordance requires a non-empty reference point set."""


class AllMaskedError(SemnavError):
    """Every candidate was masked out; no waypoint can be selected."""


class PoseInsideGeometryError(SemnavError):
    """A camera pose lies inside solid scene geometry."""


class OracleError(SemnavError):
    """Base class for decision-oracle failures."""


class OracleTransportError(OracleError):
    """The remote oracle endpoint could not be reached or timed out."""


class OracleProtocolError(OracleError):
    """The remote oracle reply was not valid JSON of the expected shape."""


class OracleInvariantError(OracleError):
    """The oracle reply violates a decision invariant (bad heading or node id)."""
