"""Exception hierarchy shared by all modules."""


class PtolemaicError(Exception):
    """Base class for every error raised by this package."""


class MetricError(PtolemaicError, ValueError):
    """A distance matrix violates a metric axiom.

    ``indices`` holds the offending point indices.
    """

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class AsymmetricMatrix(MetricError):
    pass


class NegativeDistance(MetricError):
    pass


class NonzeroDiagonal(MetricError):
    pass


class ZeroOffDiagonal(MetricError):
    pass


class TriangleViolation(MetricError):
    pass


class MetricFormatError(PtolemaicError, ValueError):
    """A metric file could not be parsed (bad JSON/CSV, ragged rows, non-finite values)."""


class TooFewPoints(PtolemaicError, ValueError):
    pass


class BadBasepoint(PtolemaicError, ValueError):
    pass


class NotSymmetric(PtolemaicError, ValueError):
    pass


class BadSpec(PtolemaicError, ValueError):
    pass


class Disconnected(PtolemaicError, ValueError):
    pass


class NotAGeodesic(PtolemaicError, ValueError):
    pass


class LineNotSampled(PtolemaicError, ValueError):
    pass


class BoundaryBasepoint(PtolemaicError, ValueError):
    pass


class WindowOutOfRange(PtolemaicError, ValueError):
    pass


class RayExitsStrip(PtolemaicError, ValueError):
    pass


class CorruptCatalog(PtolemaicError, ValueError):
    pass
