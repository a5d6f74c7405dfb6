"""Exception types shared across the package."""


class HermiteItoError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HermiteItoError, ValueError):
    """Invalid parameters or configuration file contents."""


class UsageError(HermiteItoError, ValueError):
    """Incompatible arguments, e.g. mismatched dimensions or grids."""


class NumericError(HermiteItoError, ArithmeticError):
    """A numerical self-check failed (quadrature, mass retention)."""


class SimulationError(HermiteItoError, RuntimeError):
    """A simulated path reached a non-finite state."""

    def __init__(self, message, seed=None, time=None):
        super().__init__(f"{message} (seed={seed!r}, t={time!r})")
        self.seed = seed
        self.time = time


class ResourceError(HermiteItoError, MemoryError):
    """A request would enumerate or allocate too much."""
