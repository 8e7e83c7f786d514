"""Oracle model for two-level composition objectives.

The objective is Phi(x) = F(x) + r(x) with

    F(x) = (1/n) sum_i f_i( (1/m) sum_j g_j(x) ),

where each g_j maps R^d -> R^k and each f_i maps R^k -> R. Problems expose
per-index oracles for g_j, its Jacobian, f_i and its gradient; everything else
(full-batch means, gradients, smoothness constants) is derived here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError
from .prox import Regularizer, reg_value


@dataclass(frozen=True)
class ProblemDims:
    """Problem sizes: m inner maps, n outer functions, decision dim d, inner output dim k."""

    m: int
    n: int
    d: int
    k: int

    def __post_init__(self):
        for name in ("m", "n", "d", "k"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ConfigError(f"dimension {name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class SmoothnessConstants:
    """Lipschitz data for the outer/inner maps.

    L_f, ell_f: value/gradient Lipschitz constants of the f_i.
    L_g, ell_g: value/Jacobian Lipschitz constants of the g_j.
    The gradient-Lipschitz constant of F is derived, never stored.
    """

    L_f: float
    ell_f: float
    L_g: float
    ell_g: float

    def __post_init__(self):
        for name in ("L_f", "ell_f", "L_g", "ell_g"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"smoothness constant {name} must be finite and nonnegative, got {v}")

    @property
    def ell(self) -> float:
        """Gradient-Lipschitz constant of the composed F."""
        return self.L_f * self.ell_g + self.L_g**2 * self.ell_f


class CompositionProblem:
    """Base class bundling the per-index oracles, regularizer and dimensions.

    Oracles must be pure: the same (index, point) pair always returns the same
    values. Subclasses implement the four per-index methods; the *_batch hooks
    have generic loop fallbacks (ascending index order) and may be overridden
    with vectorized versions.
    """

    #: known optimum, if the builder can certify one (used by verification)
    x_star = None
    phi_star = None

    def __init__(self, dims: ProblemDims, regularizer: Regularizer):
        self.dims = dims
        self.regularizer = regularizer
        #: dataset-size normalizer for trace x-axes; builders may override
        self.N = max(dims.m, dims.n)

    # -- per-index oracles ------------------------------------------------

    def inner_value(self, j: int, x) -> np.ndarray:
        """g_j(x), shape (k,)."""
        raise NotImplementedError

    def inner_jacobian(self, j: int, x) -> np.ndarray:
        """Jacobian of g_j at x, shape (k, d)."""
        raise NotImplementedError

    def outer_value(self, i: int, y) -> float:
        """f_i(y)."""
        raise NotImplementedError

    def outer_grad(self, i: int, y) -> np.ndarray:
        """Gradient of f_i at y, shape (k,)."""
        raise NotImplementedError

    # -- batch hooks (override for speed) ----------------------------------

    def inner_value_batch(self, idx, x) -> np.ndarray:
        return np.stack([self.inner_value(int(j), x) for j in idx])

    def inner_jacobian_batch(self, idx, x) -> np.ndarray:
        return np.stack([self.inner_jacobian(int(j), x) for j in idx])

    def outer_value_batch(self, idx, y) -> np.ndarray:
        return np.array([self.outer_value(int(i), y) for i in idx])

    def outer_grad_batch(self, idx, y) -> np.ndarray:
        return np.stack([self.outer_grad(int(i), y) for i in idx])

    def outer_grad_many(self, i: int, Y) -> np.ndarray:
        """Gradient of one f_i at a batch of points Y, shape (t, k) -> (t, k)."""
        return np.stack([self.outer_grad(i, y) for y in Y])

    # -- optional closed-form smoothness -----------------------------------

    def smoothness(self, box_radius: float):
        """Closed-form SmoothnessConstants on the box, or None if unavailable."""
        return None


def _check_point(problem: CompositionProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dims.d,):
        raise InputError(f"expected point of shape ({problem.dims.d},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("point contains non-finite entries")
    return x


def inner_mean(problem: CompositionProblem, x):
    """Full-batch inner value and Jacobian: (1/m) sum_j g_j(x), (1/m) sum_j dg_j(x)."""
    x = _check_point(problem, x)
    idx = np.arange(problem.dims.m)
    g = problem.inner_value_batch(idx, x).mean(axis=0)
    Z = problem.inner_jacobian_batch(idx, x).mean(axis=0)
    return g, Z


def outer_mean_grad(problem: CompositionProblem, y) -> np.ndarray:
    """(1/n) sum_i grad f_i(y)."""
    idx = np.arange(problem.dims.n)
    return problem.outer_grad_batch(idx, y).mean(axis=0)


def full_gradient(problem: CompositionProblem, x) -> np.ndarray:
    """Exact gradient of F via the chain rule: Z(x)^T * mean_i grad f_i(g(x))."""
    g, Z = inner_mean(problem, x)
    return Z.T @ outer_mean_grad(problem, g)


def smooth_value(problem: CompositionProblem, x) -> float:
    """F(x) without the regularizer; no feasibility requirement."""
    x = _check_point(problem, x)
    g = problem.inner_value_batch(np.arange(problem.dims.m), x).mean(axis=0)
    idx = np.arange(problem.dims.n)
    return float(problem.outer_value_batch(idx, g).mean())


def objective(problem: CompositionProblem, x) -> float:
    """Phi(x) = F(x) + r(x); raises InfeasibleQueryError outside the box."""
    x = _check_point(problem, x)
    r = reg_value(problem.regularizer, x)  # raises if infeasible
    return smooth_value(problem, x) + r


def estimate_smoothness(problem: CompositionProblem, box_radius: float, rng,
                        pairs: int = 10_000, inflation: float = 1.2) -> SmoothnessConstants:
    """Sampling-based Lipschitz estimates from pairwise slopes inside the box.

    Reports the max observed slope inflated by `inflation`. This is an
    estimate, not a certificate: slopes realized between sampled pairs can
    only under-shoot the true constants.
    """
    d, k, m, n = problem.dims.d, problem.dims.k, problem.dims.m, problem.dims.n
    X = rng.uniform(-box_radius, box_radius, size=(2 * pairs, d))
    L_g = ell_g = L_f = ell_f = 0.0
    images = []
    for p in range(pairs):
        x0, x1 = X[2 * p], X[2 * p + 1]
        dx = np.linalg.norm(x1 - x0)
        if dx < 1e-12:
            continue
        j = int(rng.integers(m))
        g0, g1 = problem.inner_value(j, x0), problem.inner_value(j, x1)
        J0, J1 = problem.inner_jacobian(j, x0), problem.inner_jacobian(j, x1)
        L_g = max(L_g, np.linalg.norm(g1 - g0) / dx)
        ell_g = max(ell_g, np.linalg.norm(J1 - J0, 2) / dx)
        if p < 1000:
            images.append(g0)
            images.append(g1)
    images = np.asarray(images)
    for p in range(pairs):
        y0 = images[int(rng.integers(len(images)))]
        y1 = images[int(rng.integers(len(images)))]
        dy = np.linalg.norm(y1 - y0)
        i = int(rng.integers(n))
        d0, d1 = problem.outer_grad(i, y0), problem.outer_grad(i, y1)
        L_f = max(L_f, np.linalg.norm(d0), np.linalg.norm(d1))
        if dy >= 1e-12:
            ell_f = max(ell_f, np.linalg.norm(d1 - d0) / dy)
    consts = SmoothnessConstants(L_f=inflation * L_f, ell_f=inflation * ell_f,
                                 L_g=inflation * L_g, ell_g=inflation * ell_g)
    if not np.isfinite(consts.ell):
        raise InputError("smoothness estimate diverged; oracles may be unbounded on the box")
    return consts


def lipschitz_bounds(problem: CompositionProblem, box_radius: float,
                     rng=None, pairs: int = 10_000) -> SmoothnessConstants:
    """Closed-form constants when the problem provides them, else a sampled estimate."""
    consts = problem.smoothness(box_radius)
    if consts is not None:
        return consts
    if rng is None:
        rng = np.random.default_rng(0)
    return estimate_smoothness(problem, box_radius, rng, pairs=pairs)
