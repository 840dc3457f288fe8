"""Exception types shared across the package."""


class LoopsysError(Exception):
    """Base class for all package-specific errors."""


class DegeneratePairing(LoopsysError):
    """The trace pairing on the given basis is singular."""


class GeometryError(LoopsysError):
    """A path violates clearance, closure or composition constraints."""


class EvalAtSingularity(LoopsysError):
    """Evaluation requested exactly at a pole of the connection."""


class IntegrationFailure(LoopsysError):
    """The ODE integrator failed (step underflow, blow-up, ...)."""


class CoincidentPoints(LoopsysError):
    """Two cover points coincide where distinct points are required."""


class DistinctnessViolation(LoopsysError):
    """Base-point projections coincide where they must be distinct."""


class IndexBudgetExceeded(LoopsysError):
    """An enumeration (basis tuples, partitions) exceeds its configured cap."""


class RamificationHit(LoopsysError):
    """Eigenvalue collision along a WKB path; the eigenframe breaks down."""


class SingularJ(LoopsysError):
    """The candidate parity matrix J is not invertible."""


class DegreeOverflow(LoopsysError):
    """Rational reconstruction would need more samples than the configured cap."""


class SchemaError(LoopsysError):
    """Configuration text does not match the expected schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DimensionMismatch(SchemaError):
    """A configured matrix is inconsistent with the representation size."""
