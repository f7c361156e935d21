"""Exception types shared across the package."""


class WetsimError(Exception):
    """Base class for all wetsim errors."""


class ConfigurationError(WetsimError):
    """Invalid grid, droplet, or solver configuration."""


class DomainError(WetsimError):
    """A coordinate lies outside the domain it is defined on."""


class GridMismatchError(WetsimError):
    """Two fields that must share a grid do not."""


class MeasurementError(WetsimError):
    """A geometric measurement (contour, contact angle) is undefined."""


class VolumeInfeasibleError(WetsimError):
    """The requested liquid area cannot be bracketed on this field."""


class InterfaceLostError(WetsimError):
    """The level-set function no longer changes sign: the droplet vanished."""


class SolverError(WetsimError):
    """Linear solve failed to reach the required residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class CurveCollapseError(WetsimError):
    """A tracked curve shrank below the resolvable scale."""


class GeometryError(WetsimError):
    """A polyline violates a geometric precondition (e.g. self-intersects)."""
