"""Exception types raised by mink4."""


class GeometryError(Exception):
    """Base class for all domain errors."""


class NonFiniteInput(GeometryError, ValueError):
    pass


# Lorentz algebra
class DegenerateSpan(GeometryError):
    """Gram-Schmidt hit a lightlike or zero intermediate vector."""


class NotLightlike(GeometryError):
    pass


class DegeneratePlane(GeometryError):
    pass


class GramMismatch(GeometryError):
    pass


# Surfaces
class OutOfDomain(GeometryError):
    pass


class NotSpacelike(GeometryError):
    pass


class NormalsNotNormal(GeometryError):
    pass


class FlatPoint(GeometryError):
    """L = M = N = 0: every tangent direction is principal."""


# Marginally trapped invariants
class NotMarginallyTrapped(GeometryError):
    pass


class NotMarginallyTrappedData(GeometryError):
    pass


class PrincipalFrameDefect(GeometryError):
    pass


class DegenerateMetricRecovery(GeometryError):
    pass


# Meridian surfaces
class CurvatureOutOfRange(GeometryError):
    pass


class ZeroCurvature(GeometryError):
    pass


class OutOfValidity(GeometryError):
    pass


class QuadratureFailure(GeometryError):
    pass


# Reconstruction
class CompatibilityTooLarge(GeometryError):
    pass


class StepFailure(GeometryError):
    pass


class ConfigError(GeometryError, ValueError):
    """Invalid run configuration; ``field`` names the offending option."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class IoError(GeometryError, OSError):
    """An output file could not be written."""
