"""l1 regularizer restricted to a centered box, and its exact proximal map."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleQueryError

# Absolute slack when testing box membership, to tolerate rounding in callers
# that project numerically rather than by clipping.
_BOX_TOL = 1e-12


@dataclass(frozen=True)
class Regularizer:
    """r(x) = lam * ||x||_1 plus the indicator of the box [-radius, radius]^d."""

    lam: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if self.lam < 0 or not np.isfinite(self.lam):
            raise ConfigError(f"l1 weight must be finite and nonnegative, got {self.lam}")
        if self.radius <= 0 or not np.isfinite(self.radius):
            raise ConfigError(f"box radius must be finite and positive, got {self.radius}")

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.abs(x) <= self.radius * (1.0 + _BOX_TOL) + _BOX_TOL))


def prox_step(reg: Regularizer, x, eta: float):
    """Exact prox of r at x with parameter eta.

    The objective lam*||y||_1 + ||y - x||^2 / (2*eta) over the box is separable,
    so soft-thresholding by eta*lam followed by clipping is the exact minimizer.
    """
    if eta <= 0:
        raise ConfigError(f"prox step size must be positive, got {eta}")
    x = np.asarray(x, dtype=float)
    shrunk = np.sign(x) * np.maximum(np.abs(x) - eta * reg.lam, 0.0)
    return np.clip(shrunk, -reg.radius, reg.radius)


def reg_value(reg: Regularizer, x) -> float:
    """lam * ||x||_1 for feasible x; infeasible queries raise."""
    x = np.asarray(x, dtype=float)
    if not reg.contains(x):
        raise InfeasibleQueryError(
            f"point with max |x_i| = {np.max(np.abs(x)):g} is outside the box of radius {reg.radius:g}"
        )
    return float(reg.lam * np.sum(np.abs(x)))
