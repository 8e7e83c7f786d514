"""Reference algorithms for head-to-head benchmarking.

These are standard published methods, reimplemented here (not the original
authors' code): full-batch accelerated proximal gradient with restarts (AGD),
the two-timescale compositional stochastic gradient method (SCGD), its
accelerated proximal variant (ASC-PG), and the constant-epoch variance-reduced
method (VRSC-PG). All of them emit the shared trace schema with the same
sample-charging rules as the main solver, so their x-axes are comparable.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError
from .estimators import SampleMeter, draw_minibatch, estimate_gradient, minibatch_rng, take_snapshot
from .problem import CompositionProblem, full_gradient, lipschitz_bounds, objective
from .prox import prox_step
from .trace import TraceRecord


@dataclass
class BaselineConfig:
    """Knobs for the baseline roster; unused fields are ignored per algorithm."""

    max_samples: int
    seed: int = 0
    eta: float = 0.01       # constant step (VRSC-PG)
    alpha0: float = 0.1     # step scale for shrinking-step methods
    p_x: float = 0.75       # step decay exponent
    beta0: float = 1.0      # inner-tracker weight scale
    p_y: float = 0.5        # tracker decay exponent
    K: int | None = None    # VRSC-PG epoch length; default ceil((m+n)^(2/3))
    a: int = 5
    b: int = 5
    trace_every: int | None = None

    def __post_init__(self):
        if self.max_samples <= 0:
            raise ConfigError("sample budget must be positive")
        if self.eta <= 0 or self.alpha0 <= 0 or self.beta0 <= 0:
            raise ConfigError("step parameters must be positive")


class _Recorder:
    """Collects trace rows and enforces the objective divergence guard."""

    def __init__(self, problem, algorithm, seed, meter, phi_star=None):
        self.problem = problem
        self.algorithm = algorithm
        self.seed = seed
        self.meter = meter
        self.phi_star = phi_star
        self.N = getattr(problem, "N", max(problem.dims.m, problem.dims.n))
        self.rows = []
        self.phi_limit = None

    def record(self, epoch, iteration, x):
        obj = objective(self.problem, x)
        if self.phi_limit is None:
            self.phi_limit = 1e6 * (abs(obj) + 1.0)
        elif obj > self.phi_limit:
            raise DivergenceError(
                f"{self.algorithm}: objective {obj:g} exceeded the divergence limit")
        gap = None if self.phi_star is None else obj - self.phi_star
        self.rows.append(TraceRecord(
            algorithm=self.algorithm, seed=self.seed, epoch=epoch, iteration=iteration,
            samples=self.meter.total, samples_per_N=self.meter.total / self.N,
            objective=obj, gap=gap))


def _check_finite(x, algorithm):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(f"{algorithm}: non-finite iterate")


def run_agd(problem: CompositionProblem, config: BaselineConfig, x0,
            phi_star: float | None = None):
    """Accelerated full-batch proximal gradient with function restarts.

    Step 1/ell from the problem's smoothness bound; every iteration charges
    m + n samples (one full gradient).
    """
    m, n = problem.dims.m, problem.dims.n
    ell = lipschitz_bounds(problem, problem.regularizer.radius).ell
    step = 1.0 / ell
    meter = SampleMeter()
    rec = _Recorder(problem, "agd", config.seed, meter, phi_star)
    x = np.asarray(x0, dtype=float).copy()
    rec.record(0, 0, x)
    y = x.copy()
    t_k = 1.0
    phi_prev = objective(problem, x)
    it = 0
    while meter.total + m + n <= config.max_samples:
        it += 1
        grad = full_gradient(problem, y)
        meter.add(m + n)
        x_new = prox_step(problem.regularizer, y - step * grad, step)
        _check_finite(x_new, "agd")
        phi_new = objective(problem, x_new)
        if phi_new > phi_prev:
            # restart the momentum from the current iterate
            t_k = 1.0
            y = x.copy()
            phi_prev = objective(problem, x)
        else:
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t_k**2)) / 2.0
            y = x_new + ((t_k - 1.0) / t_next) * (x_new - x)
            t_k = t_next
            x = x_new
            phi_prev = phi_new
        if config.trace_every is not None and it % config.trace_every == 0:
            rec.record(0, it, x)
    rec.record(0, it, x)
    return x, rec.rows


def run_scgd(problem: CompositionProblem, config: BaselineConfig, x0,
             phi_star: float | None = None):
    """Two-timescale compositional SGD with a running inner-value tracker.

    y_t tracks g(x_t) with weight beta0 / t^p_y; steps use alpha0 / t^p_x.
    Each iteration charges 2 samples (one inner, one outer).
    """
    return _scgd_core(problem, config, x0, phi_star, accelerated=False, tag="scgd")


def run_ascpg(problem: CompositionProblem, config: BaselineConfig, x0,
              phi_star: float | None = None):
    """Accelerated proximal variant of the two-timescale method.

    The inner tracker is refreshed at an extrapolated query point
    z = x_t + (1/beta_t)(x_{t+1} - x_t), which corrects the tracker's lag;
    the iterate update itself carries no momentum. Charges 3 samples per
    iteration (Jacobian at x, inner value at z, one outer gradient).
    """
    return _scgd_core(problem, config, x0, phi_star, accelerated=True, tag="ascpg")


def _scgd_core(problem, config, x0, phi_star, accelerated, tag):
    m, n = problem.dims.m, problem.dims.n
    meter = SampleMeter()
    rec = _Recorder(problem, tag, config.seed, meter, phi_star)
    x = np.asarray(x0, dtype=float).copy()
    cost = 3 if accelerated else 2
    if accelerated:
        # seed the tracker with one inner sample at the start point
        rng0 = minibatch_rng(config.seed, 0, 0, stream=2)
        y = problem.inner_value(int(rng0.integers(m)), x)
        meter.add(1)
    else:
        y = np.zeros(problem.dims.k)
    rec.record(0, 0, x)
    t = 0
    while meter.total + cost <= config.max_samples:
        t += 1
        rng = minibatch_rng(config.seed, 0, t, stream=2)
        j = int(rng.integers(m))
        i = int(rng.integers(n))
        beta_t = min(1.0, config.beta0 / t**config.p_y)
        alpha_t = config.alpha0 / t**config.p_x
        if accelerated:
            grad = problem.inner_jacobian(j, x).T @ problem.outer_grad(i, y)
            x_new = prox_step(problem.regularizer, x - alpha_t * grad, alpha_t)
            z = x + (1.0 / beta_t) * (x_new - x)
            j2 = int(rng.integers(m))
            y = (1.0 - beta_t) * y + beta_t * problem.inner_value(j2, z)
            x = x_new
        else:
            y = (1.0 - beta_t) * y + beta_t * problem.inner_value(j, x)
            grad = problem.inner_jacobian(j, x).T @ problem.outer_grad(i, y)
            x = prox_step(problem.regularizer, x - alpha_t * grad, alpha_t)
        meter.add(cost)
        _check_finite(x, tag)
        if config.trace_every is not None and t % config.trace_every == 0:
            rec.record(0, t, x)
    rec.record(0, t, x)
    return x, rec.rows


def run_vrscpg(problem: CompositionProblem, config: BaselineConfig, x0,
               phi_star: float | None = None):
    """Constant-epoch variance-reduced proximal method.

    Reuses the snapshot/estimator machinery with a fixed epoch length K and a
    constant step; the reference point for each snapshot is the last iterate.
    Charges m + n per snapshot and a + b per inner step.
    """
    m, n = problem.dims.m, problem.dims.n
    K = config.K if config.K is not None else int(np.ceil((m + n) ** (2.0 / 3.0)))
    if K < 1:
        raise ConfigError(f"epoch length must be >= 1, got {K}")
    meter = SampleMeter()
    rec = _Recorder(problem, "vrscpg", config.seed, meter, phi_star)
    x = np.asarray(x0, dtype=float).copy()
    rec.record(0, 0, x)
    epoch = 0
    while meter.total + (m + n) + (config.a + config.b) <= config.max_samples:
        epoch += 1
        snapshot = take_snapshot(problem, x, meter=meter)
        for t in range(K):
            draw = draw_minibatch(m, n, config.a, config.b, config.seed, epoch, t)
            A = np.arange(m) if config.a == m else draw.A
            B = np.arange(n) if config.b == n else draw.B
            v = estimate_gradient(problem, snapshot, x, A, B, meter=meter)
            x = prox_step(problem.regularizer, x - config.eta * v, config.eta)
            _check_finite(x, "vrscpg")
            if config.trace_every is not None and (t + 1) % config.trace_every == 0:
                rec.record(epoch, t + 1, x)
            if meter.total + (config.a + config.b) > config.max_samples:
                break
        rec.record(epoch, K, x)
    return x, rec.rows
