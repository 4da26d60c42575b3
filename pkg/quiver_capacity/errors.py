class QuiverCapacityError(ValueError):
    """Base class for all errors raised by quiver_capacity."""


class NotPositiveDefinite(QuiverCapacityError):
    """A matrix expected to be symmetric positive definite failed certification."""


class DimensionMismatch(QuiverCapacityError):
    """Matrix shapes disagree with the dimension vector or with each other."""


class InvalidAjn(QuiverCapacityError):
    """An AJN datum violates balance or surjectivity."""


class Imbalance(QuiverCapacityError):
    """The weight is not balanced against the dimension vector (sigma . beta != 0)."""


class SingularAggregate(QuiverCapacityError):
    """Some sink aggregate M_j is not positive definite."""


class SingularUpdate(QuiverCapacityError):
    """The fixed-point bracket for some source is not positive definite."""


class ZeroRepresentation(QuiverCapacityError):
    """The operation needs a nonzero representation."""


class SingularBlock(QuiverCapacityError):
    """A group element block is not invertible."""


class NotExtremal(QuiverCapacityError):
    """The tuple is not a stationary point of the capacity functional."""


class SplitImbalance(QuiverCapacityError):
    """The sub-dimension vector of a decomposition is not balanced."""


class NotTriangular(QuiverCapacityError):
    """Some arrow map is not upper block triangular with respect to the split."""


class DatumParseError(QuiverCapacityError):
    """A datum or sigma file could not be parsed."""
