"""Variance-reduced compositional solver with doubling epochs and adaptive steps.

The driver runs S epochs. Epoch body s (s = 0..S-1) takes a snapshot at the
current reference, performs k0 * 2^(s+1) minibatch proximal steps, and sets the
next reference to the unweighted average of the iterates visited. A single
global counter l drives the step schedule eta * sqrt(T) / sqrt(2T - l) with
T = k0 * 2^S - k0; since the epoch lengths sum to 2T the denominator is clamped
at 1 on the final step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError, InputError
from .estimators import (EpochSnapshot, SampleMeter, draw_minibatch,
                         estimate_gradient, take_snapshot)
from .problem import CompositionProblem, objective
from .prox import prox_step
from .trace import TraceRecord

SCHEDULES = ("adaptive", "constant")


@dataclass
class RunConfig:
    """Solver inputs: first epoch length k0, epoch count S, base step eta,
    batch sizes a/b, seed and step schedule mode."""

    S: int
    k0: int = 10
    eta: float = 0.01
    a: int = 5
    b: int = 5
    seed: int = 0
    schedule: str = "adaptive"

    def __post_init__(self):
        if self.k0 < 1:
            raise ConfigError(f"first epoch length k0 must be >= 1, got {self.k0}")
        if self.S < 0:
            raise ConfigError(f"epoch count S must be >= 0, got {self.S}")
        if self.eta <= 0:
            raise ConfigError(f"base step eta must be positive, got {self.eta}")
        if not (1 <= self.a < 2**31 and 1 <= self.b < 2**31):
            raise ConfigError(f"batch sizes out of range: a={self.a}, b={self.b}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")

    @property
    def epochs(self) -> int:
        """Number of epoch bodies; S = 0 still runs the first epoch."""
        return max(self.S, 1)

    @property
    def T(self) -> int:
        """Schedule horizon; the epoch lengths k0*2, ..., k0*2^epochs sum to 2T."""
        return self.k0 * 2**self.epochs - self.k0


@dataclass
class StepSchedule:
    """Global inner-iteration counter l against the fixed horizon T."""

    T: int
    l: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError(f"schedule horizon T must be >= 1, got {self.T}")


def step_size(eta: float, T: int, l: int) -> float:
    """eta * sqrt(T) / sqrt(max(2T - l, 1)); nondecreasing in l."""
    return eta * math.sqrt(T) / math.sqrt(max(2 * T - l, 1))


@dataclass(frozen=True)
class TheoremParams:
    """Initial distance/gap bounds and tolerance that size a worst-case run."""

    D_x: float
    D_Phi: float
    ell: float
    epsilon: float

    def __post_init__(self):
        for name in ("D_x", "D_Phi", "ell", "epsilon"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def beta(self) -> float:
        return self.epsilon / (90.0 * self.ell * self.D_x**2)


def derive_theorem_params(D_x: float, D_Phi: float, ell: float, epsilon: float,
                          seed: int = 0) -> RunConfig:
    """Worst-case-analysis configuration for a target tolerance epsilon.

    k0 = 10, S = floor(log2((6 D_Phi + 15 ell D_x^2) / eps)) + 1,
    eta = D_x^2 / (10 D_Phi + 25 ell D_x^2),
    a = ceil(1620 ell^2 D_x^4 / eps^2), b = ceil(810 ell^2 D_x^4 / eps^2).
    """
    params = TheoremParams(D_x=D_x, D_Phi=D_Phi, ell=ell, epsilon=epsilon)
    S = math.floor(math.log2((6 * D_Phi + 15 * ell * D_x**2) / epsilon)) + 1
    if S < 1:
        S = 1
    eta = D_x**2 / (10 * D_Phi + 25 * ell * D_x**2)
    a = math.ceil(1620 * ell**2 * D_x**4 / epsilon**2)
    b = math.ceil(810 * ell**2 * D_x**4 / epsilon**2)
    if a >= 2**31 or b >= 2**31:
        raise ConfigError(
            f"tolerance {epsilon:g} requires batch sizes a={a}, b={b}; "
            "use a practical configuration (e.g. a=b=5) instead")
    del params  # validated above
    return RunConfig(S=S, k0=10, eta=eta, a=a, b=b, seed=seed, schedule="adaptive")


@dataclass(frozen=True)
class EpochInfo:
    """Per-epoch diagnostics (epoch index is 1-based, matching k_s = k0*2^s)."""

    epoch: int
    x_ref: np.ndarray     # reference the snapshot was taken at
    x_start: np.ndarray   # first iterate of the epoch
    x_avg: np.ndarray     # unweighted mean of the k pre-update iterates
    x_last: np.ndarray    # iterate after the final update
    k: int
    l_start: int
    eta_start: float
    samples_end: int


@dataclass
class EpochResult:
    x_avg: np.ndarray
    x_last: np.ndarray
    trace: list
    stopped: bool = False  # budget exhausted mid-epoch


@dataclass
class ScvrgResult:
    x: np.ndarray
    trace: list
    epochs: list
    samples: int
    l_final: int


def _current_step(config: RunConfig, schedule: StepSchedule) -> float:
    if config.schedule == "constant":
        return config.eta
    return step_size(config.eta, schedule.T, schedule.l)


def run_epoch(problem: CompositionProblem, snapshot: EpochSnapshot, x0, k: int,
              schedule: StepSchedule, config: RunConfig, epoch_index: int,
              meter: SampleMeter | None = None, phi_star: float | None = None,
              trace_every: int | None = None, max_samples: int | None = None,
              algorithm: str = "scvrg", phi_limit: float | None = None) -> EpochResult:
    """k minibatch proximal steps from x0 against one snapshot.

    Returns the unweighted mean of the k pre-update iterates, the final
    iterate, and trace rows. Advances schedule.l by one per step. When a == m
    (resp. b == n) the draw enumerates every index once, making the estimate
    exact; otherwise indices are sampled uniformly with replacement.
    """
    if k < 1:
        raise ConfigError(f"epoch length must be >= 1, got {k}")
    m, n = problem.dims.m, problem.dims.n
    meter = meter if meter is not None else SampleMeter()
    x = np.asarray(x0, dtype=float).copy()
    x_sum = np.zeros_like(x)
    trace = []
    N = getattr(problem, "N", max(m, n))
    stopped = False

    full_A = np.arange(m) if config.a == m else None
    full_B = np.arange(n) if config.b == n else None

    def record(t):
        obj = objective(problem, x)
        if phi_limit is not None and obj > phi_limit:
            raise DivergenceError(
                f"objective {obj:g} exceeded the divergence limit at epoch {epoch_index}, step {t}")
        gap = None if phi_star is None else obj - phi_star
        trace.append(TraceRecord(algorithm=algorithm, seed=config.seed, epoch=epoch_index,
                                 iteration=t, samples=meter.total,
                                 samples_per_N=meter.total / N, objective=obj, gap=gap))

    for t in range(k):
        x_sum += x
        if full_A is not None and full_B is not None:
            A, B = full_A, full_B
        else:
            draw = draw_minibatch(m, n, config.a, config.b, config.seed, epoch_index, t)
            A = full_A if full_A is not None else draw.A
            B = full_B if full_B is not None else draw.B
        v = estimate_gradient(problem, snapshot, x, A, B, meter=meter)
        eta_t = _current_step(config, schedule)
        schedule.l += 1
        x = prox_step(problem.regularizer, x - eta_t * v, eta_t)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite iterate at epoch {epoch_index}, step {t}")
        if trace_every is not None and (t + 1) % trace_every == 0 and t + 1 < k:
            record(t + 1)
        if max_samples is not None and meter.total >= max_samples:
            stopped = True
            x_sum += x * (k - t - 1)  # freeze the average at the stop point
            break
    record(k)
    return EpochResult(x_avg=x_sum / k, x_last=x, trace=trace, stopped=stopped)


def run_scvrg(problem: CompositionProblem, config: RunConfig, x0,
              phi_star: float | None = None, trace_every: int | None = None,
              max_samples: int | None = None, algorithm: str = "scvrg") -> ScvrgResult:
    """Full doubling-epoch run: S epoch bodies, returning the final reference.

    Epoch body s (0-based) has length k0 * 2^(s+1); its snapshot is taken at
    the previous epoch's average (the initial point for s = 0) and its first
    iterate is the previous epoch's last iterate. Per-epoch sample charge is
    m + n + k * (a + b).
    """
    x0 = np.asarray(x0, dtype=float)
    if not problem.regularizer.contains(x0):
        raise InputError("initial point is outside the feasible box")
    meter = SampleMeter()
    schedule = StepSchedule(T=config.T)
    phi0 = objective(problem, x0)
    phi_limit = 1e6 * (abs(phi0) + 1.0)
    x_ref = x0.copy()
    x_cur = x0.copy()
    trace: list[TraceRecord] = []
    epochs: list[EpochInfo] = []
    for s in range(config.epochs):
        snapshot = take_snapshot(problem, x_ref, meter=meter)
        k = config.k0 * 2 ** (s + 1)
        l_start = schedule.l
        eta_start = _current_step(config, schedule)
        result = run_epoch(problem, snapshot, x_cur, k, schedule, config,
                           epoch_index=s + 1, meter=meter, phi_star=phi_star,
                           trace_every=trace_every, max_samples=max_samples,
                           algorithm=algorithm, phi_limit=phi_limit)
        epochs.append(EpochInfo(epoch=s + 1, x_ref=x_ref, x_start=x_cur,
                                x_avg=result.x_avg, x_last=result.x_last, k=k,
                                l_start=l_start, eta_start=eta_start,
                                samples_end=meter.total))
        trace.extend(result.trace)
        x_ref = result.x_avg
        x_cur = result.x_last
        if result.stopped:
            break
    return ScvrgResult(x=x_ref, trace=trace, epochs=epochs,
                       samples=meter.total, l_final=schedule.l)


def predicted_total_samples(config: RunConfig, m: int, n: int) -> int:
    """Exact sample count of a full (unbudgeted) run: sum_s m + n + k_s (a+b)."""
    total = 0
    for s in range(config.epochs):
        total += m + n + config.k0 * 2 ** (s + 1) * (config.a + config.b)
    return total
