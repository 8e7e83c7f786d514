"""Exception types shared across the package."""


class CompoptError(Exception):
    """Base class for all package-specific errors."""


class InputError(CompoptError, ValueError):
    """Malformed user input: bad files, bad dimensions, bad flags."""


class ConfigError(CompoptError, ValueError):
    """Inconsistent or out-of-range algorithm configuration."""


class InfeasibleQueryError(CompoptError, ValueError):
    """A point outside the feasible box was passed where feasibility is required."""


class DivergenceError(CompoptError, RuntimeError):
    """A run produced a non-finite or exploding iterate and was aborted."""
