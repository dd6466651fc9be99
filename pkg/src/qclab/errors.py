"""Exception hierarchy shared by all qclab modules."""


class QclabError(Exception):
    """Base class for qclab errors."""


class ConfigurationError(QclabError, ValueError):
    """Inconsistent grid, field, or run configuration."""


class DomainError(QclabError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidBoundError(DomainError):
    """A dilatation bound k is not in [0, 1)."""


class DivergedError(QclabError, RuntimeError):
    """The Neumann iteration did not reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class OutOfDomainError(DomainError):
    """A point lies outside the sampled grid."""


class OutOfRangeError(DomainError):
    """No preimage of a point could be located on the grid."""


class DegenerateJacobianError(QclabError, ArithmeticError):
    """The holomorphic derivative of a map is numerically zero."""


class ResolutionError(QclabError, ValueError):
    """The grid or quadrature does not resolve the requested geometry."""


class LayoutError(DomainError):
    """A disk or square layout violates the preconditions of an experiment."""


class FitError(QclabError, ValueError):
    """Too few usable scales or samples for a regression."""


class RefineGridError(QclabError, ValueError):
    """A threshold grid is too coarse for the requested consistency."""


class ConformalityWarning(UserWarning):
    """A map was assumed conformal on a region where its dilatation is nonzero."""


class CompactSupportWarning(UserWarning):
    """A field does not vanish outside the periodization guard band."""
