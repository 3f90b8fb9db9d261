"""Exception hierarchy and warnings shared across the package."""


class GapLabError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(GapLabError, ValueError):
    """An argument violates a documented precondition."""


class ConvexityError(GapLabError):
    """A potential fails the discrete 1-convexity requirement.

    Carries the worst offending node and its second-difference quotient.
    """

    def __init__(self, node_index: int, node: float, quotient: float, required: float):
        self.node_index = node_index
        self.node = node
        self.quotient = quotient
        self.required = required
        super().__init__(
            f"second difference quotient {quotient:.6g} < {required:.6g} "
            f"at node {node_index} (x = {node:.6g})"
        )


class DegenerateMeasureError(GapLabError):
    """Normalization constant underflowed or is otherwise unusable."""


class TruncationError(GapLabError):
    """An operation would push non-negligible mass off the grid."""


class ResolutionError(GapLabError):
    """The grid is too coarse to resolve the requested quantity."""


class NumericalFailureError(GapLabError):
    """A solver did not converge or an asserted inequality failed."""


class DegenerateCompositionError(GapLabError):
    """A composed function is numerically zero and cannot be normalized."""


class MonotonicityWarning(UserWarning):
    """A function expected to be monotone is not; results may be off."""


class DiscretizationWarning(UserWarning):
    """A quantity exceeded its discretization-error budget."""
