class LandscapeLabError(Exception):
    pass


class ConfigError(LandscapeLabError, ValueError):
    """Invalid user input or configuration (CLI exit code 2)."""


class ArtifactError(LandscapeLabError):
    """Missing or stale artifact referenced by a manifest (CLI exit code 2)."""


class NumericalBreakdown(LandscapeLabError, RuntimeError):
    """A solver failed to reach its tolerance (CLI exit code 4)."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NearEigenvalueError(NumericalBreakdown):
    """A shifted solve was attempted at (or numerically at) an eigenvalue.

    ``distance`` is an upper estimate of the distance from the shift to the
    nearest eigenvalue, ``||rhs|| / ||w||`` from the last attempted solve.
    """

    def __init__(self, shift, distance, residual=None):
        super().__init__(
            f"shift {shift!r} is at or near an eigenvalue "
            f"(nearest eigenvalue within ~{distance:.3e})",
            residual=residual,
        )
        self.shift = shift
        self.distance = distance
