"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class NumericalDegeneracyError(RuntimeError):
    """A Cholesky factorization failed even after the jitter escalation.

    Carries the largest relative jitter that was attempted.
    """

    def __init__(self, message, jitter=None):
        super().__init__(message)
        self.jitter = jitter


class ParticleDegeneracyError(RuntimeError):
    """Every particle weight vanished at some time step."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
