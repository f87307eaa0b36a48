"""Exception types shared across the package."""


class ColocateError(Exception):
    """Base class for all package-specific errors."""


class AngleNearPiError(ColocateError):
    """Rotation logarithm requested too close to the branch cut at pi."""


class NonPositiveDefiniteError(ColocateError):
    """A matrix that must be symmetric positive definite failed its Cholesky check.

    Carries enough context (time, robot index) for a caller to report where a
    run went numerically bad.
    """

    def __init__(self, message, t=None, robot=None):
        super().__init__(message)
        self.t = t
        self.robot = robot

    def __str__(self):
        where = []
        if self.t is not None:
            where.append(f"t={self.t:.6g}s")
        if self.robot is not None:
            where.append(f"robot={self.robot}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base


class WrongRobotError(ColocateError):
    """A node received a message addressed to a different robot."""


class EpochMismatchError(ColocateError):
    """Message and node disagree on time or update epoch; applying it would corrupt state."""


class MissingTokenError(ColocateError):
    """A broadcast cannot be applied because a propagation token is absent."""


class SingularCoreError(ColocateError):
    """The low-rank update core matrix is numerically singular."""


class ConfigError(ColocateError):
    """Scenario file or run configuration is invalid."""
