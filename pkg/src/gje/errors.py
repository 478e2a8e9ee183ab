"""Exception hierarchy shared by all modules."""


class GJEError(Exception):
    """Base class for every error raised by the package."""


class StencilExitsDomain(GJEError):
    """A finite-difference stencil would sample outside the closed domain."""


class NoConvergence(GJEError):
    """An iterative solver hit its iteration cap."""


class LeftDomain(GJEError):
    """A solver iterate left the domain even after step damping."""


class OutOfRange(GJEError):
    """A value lies outside the range reachable on the current fibre."""


class SingularMatrix(GJEError):
    """|det E| fell below the configured floor."""


class SegmentExitsDomain(GJEError):
    """A g-segment left the admissible region.

    Carries the offending parameter value and point so callers can report the
    witness instead of just the failure.
    """

    def __init__(self, message, theta=None, point=None):
        super().__init__(message)
        self.theta = theta
        self.point = point


class SegmentExitsGrid(SegmentExitsDomain):
    """A segment used by the probe left the potential's grid."""


class HypothesisFails(GJEError):
    """An input violates the hypothesis of the check being run."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class EmptyAdmissibleSet(GJEError):
    """No grid point was admissible for a transform evaluation."""


class ConfigError(GJEError):
    """Invalid problem configuration."""
