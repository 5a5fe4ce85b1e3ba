"""Exception types shared across the package."""


class Sl3obsError(Exception):
    """Base class for all package-specific errors."""


class SingularMatrix(Sl3obsError):
    """Matrix is singular (or numerically too close to it) to map into SL(3)."""


class DegenerateGeometry(Sl3obsError):
    """Camera/plane configuration invalid: camera at or behind the scene plane,
    or a feature ray misses the plane."""


class BehindCamera(Sl3obsError):
    """Direction cannot be imaged: it points to the closed half-space behind
    the camera."""


class MissingVelocity(Sl3obsError):
    """Full-velocity observer stepped without a group-velocity measurement."""


class ConfigError(Sl3obsError):
    """Malformed scenario configuration."""


class OracleDisagreement(Sl3obsError):
    """The combinatorial consistency check and the stabilizer-rank oracle
    disagree on a direction set."""

    def __init__(self, message, directions=None):
        super().__init__(message)
        self.directions = directions
