"""Exception hierarchy shared by all eddymor modules."""


class EddyMorError(Exception):
    """Base class for all library errors."""


class ShapeError(EddyMorError):
    """Operands have incompatible or invalid dimensions."""


class NotPositiveDefinite(EddyMorError):
    """A matrix required to be SPD failed its Cholesky factorization."""


class GeometryError(EddyMorError):
    """Invalid filament geometry (overlapping wires, bad radii)."""


class ConstraintError(EddyMorError):
    """Malformed net-current constraint definition."""


class DomainError(EddyMorError):
    """Scalar argument outside the valid domain of a formula or waveform."""


class EmptyForcingError(EddyMorError):
    """No excitation family contributed any forcing direction."""


class SingularProjection(EddyMorError):
    """Projected system matrix is singular (basis lost rank)."""


class SingularityError(EddyMorError):
    """Field evaluation requested on or too close to a filament wire."""


class TrainingError(EddyMorError):
    """Surrogate training diverged (non-finite loss)."""


class ConfigError(EddyMorError):
    """Invalid pipeline configuration document."""


class StageError(EddyMorError):
    """A pipeline stage is missing one of its input artifacts."""
