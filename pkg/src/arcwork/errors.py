"""Exception types shared across the package."""


class ArcworkError(Exception):
    """Base class for all arcwork errors."""


class InvalidPunctureCount(ArcworkError, ValueError):
    """Raised when a disk is requested with fewer than one puncture."""


class NonRealizableRoute(ArcworkError, ValueError):
    """Raised when a route instruction references an edge not adjacent to the
    region the arc is currently travelling through."""


class SelfCrossing(ArcworkError, ValueError):
    """Raised when a route would make an arc cross itself."""


class StaleBigon(ArcworkError, ValueError):
    """Raised when a bigon witness does not match the diagram it is applied to."""


class UnknownArc(ArcworkError, KeyError):
    """Raised when an arc id is not present in a diagram."""


class NotGoodFamily(ArcworkError, ValueError):
    """Raised when an operation requires a good family and the input is not one."""


class MismatchedSurface(ArcworkError, ValueError):
    """Raised when two diagrams live on disks with different puncture counts."""


class NotMinimal(ArcworkError, ValueError):
    """Raised when an operation requires a diagram in minimal position."""


class UnknownVertex(ArcworkError, KeyError):
    """Raised when a vertex id is not present in a square complex."""


class EmptyComplex(ArcworkError, ValueError):
    """Raised when an operation requires a nonempty square complex."""


class MalformedDocument(ArcworkError, ValueError):
    """Raised when a JSON interchange document fails validation."""
