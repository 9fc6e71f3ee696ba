"""Exception and warning types raised by the library."""

from __future__ import annotations


class EquisphereError(Exception):
    """Base class for all library errors."""


class ParseError(EquisphereError):
    """Mesh file is malformed or uses an unsupported encoding."""


class TopologyError(EquisphereError):
    """Mesh is not a closed, orientable, genus-zero 2-manifold."""


class DegenerateFace(EquisphereError):
    """A domain triangle has (numerically) zero area."""


class DegenerateImage(EquisphereError):
    """An image triangle on the sphere has (numerically) zero area."""


class PoleError(EquisphereError):
    """Stereographic projection requested at the north pole."""


class OriginError(EquisphereError):
    """Plane inversion requested at the origin."""


class RegionMismatch(EquisphereError):
    """Coordinate vector and region matrix dimensions disagree."""


class SingularSystem(EquisphereError):
    """Factorization of an interior system broke down."""

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


class EmptyInterior(EquisphereError):
    """A hemisphere region has no interior vertices."""


class EmptyBoundary(EquisphereError):
    """A hemisphere region has no boundary ring."""


class NonFiniteEnergy(EquisphereError):
    """The stretch energy became NaN or infinite during iteration."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class DimensionMismatch(EquisphereError):
    """Snapshots passed to a diagnostic disagree in shape or partition."""


class SingularGamma(EquisphereError):
    """A chart inversion denominator vanished while building transfer blocks."""


class EigenFailure(EquisphereError):
    """Dense eigensolver did not converge."""


class IllConditioned(UserWarning):
    """Condition estimate of an interior system exceeds the warning threshold."""


class CenteringFailed(UserWarning):
    """Mobius mass centering did not reach its tolerance."""


class InaccurateSolve(UserWarning):
    """Interior solve residual exceeds the accepted bound."""
