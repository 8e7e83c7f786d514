"""Reference snapshots and control-variate minibatch gradient estimators.

One epoch pins a reference point x~ and caches the full inner value g~, inner
Jacobian Z~ and gradient v~ there. Minibatch estimates of the inner quantities
and the gradient are then corrected by the cached values, so their variance
vanishes as the iterate approaches the reference.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .problem import CompositionProblem, inner_mean, outer_mean_grad

_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class EpochSnapshot:
    """Reference point with its exact full-batch quantities."""

    x_tilde: np.ndarray
    g_tilde: np.ndarray   # (k,)
    z_tilde: np.ndarray   # (k, d)
    v_tilde: np.ndarray   # (d,)


@dataclass(frozen=True)
class MiniBatchDraw:
    """Index draws for one iteration: A over inner maps, B over outer functions."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        if len(self.A) == 0 or len(self.B) == 0:
            raise ConfigError("minibatch draws must be nonempty")


@dataclass
class SampleMeter:
    """Running count of oracle samples, shared by all algorithms.

    One inner index costs 1 (the g_j/dg_j pair at one point), one outer index
    costs 1, a full snapshot costs m+n.
    """

    total: int = 0

    def add(self, count: int):
        self.total += int(count)


def minibatch_rng(seed: int, epoch: int, iteration: int, stream: int = 0):
    """Counter-based generator keyed by (seed, epoch, iteration, stream).

    Philox is splittable: distinct counters give independent streams, so draws
    are reproducible per iteration regardless of execution order.
    """
    key = np.uint64(np.int64(seed).view(np.uint64) & _U64)
    bg = np.random.Philox(key=key, counter=[0, epoch, iteration, stream])
    return np.random.Generator(bg)


def draw_minibatch(m: int, n: int, a: int, b: int,
                   seed: int, epoch: int, iteration: int) -> MiniBatchDraw:
    """Uniform with-replacement draws of a inner and b outer indices."""
    if a < 1 or b < 1:
        raise ConfigError(f"batch sizes must be >= 1, got a={a}, b={b}")
    rng_a = minibatch_rng(seed, epoch, iteration, stream=0)
    rng_b = minibatch_rng(seed, epoch, iteration, stream=1)
    return MiniBatchDraw(A=rng_a.integers(0, m, size=a), B=rng_b.integers(0, n, size=b))


def take_snapshot(problem: CompositionProblem, x_tilde, meter: SampleMeter | None = None) -> EpochSnapshot:
    """Full-batch snapshot at x_tilde; charges m+n samples."""
    x_tilde = np.asarray(x_tilde, dtype=float)
    g, Z = inner_mean(problem, x_tilde)
    v = Z.T @ outer_mean_grad(problem, g)
    if meter is not None:
        meter.add(problem.dims.m + problem.dims.n)
    return EpochSnapshot(x_tilde=x_tilde.copy(), g_tilde=g, z_tilde=Z, v_tilde=v)


def estimate_inner(problem: CompositionProblem, snapshot: EpochSnapshot, x, A,
                   meter: SampleMeter | None = None):
    """Control-variate estimates of the inner value and Jacobian at x.

    g_t = g~ + mean_{j in A} (g_j(x) - g_j(x~)), and likewise for the Jacobian.
    Charges len(A) inner samples.
    """
    A = np.asarray(A)
    if A.size == 0:
        raise ConfigError("inner minibatch A must be nonempty")
    x = np.asarray(x, dtype=float)
    g_new = problem.inner_value_batch(A, x)
    g_ref = problem.inner_value_batch(A, snapshot.x_tilde)
    z_new = problem.inner_jacobian_batch(A, x)
    z_ref = problem.inner_jacobian_batch(A, snapshot.x_tilde)
    g_t = snapshot.g_tilde + (g_new - g_ref).mean(axis=0)
    z_t = snapshot.z_tilde + (z_new - z_ref).mean(axis=0)
    if meter is not None:
        meter.add(A.size)
    return g_t, z_t


def estimate_gradient(problem: CompositionProblem, snapshot: EpochSnapshot, x, A, B,
                      meter: SampleMeter | None = None) -> np.ndarray:
    """Variance-reduced gradient estimate built on the inner estimates.

    v_t = v~ + mean_{i in B} ( z_t^T grad f_i(g_t) - z~^T grad f_i(g~) ).
    Charges len(A) inner plus len(B) outer samples.
    """
    B = np.asarray(B)
    if B.size == 0:
        raise ConfigError("outer minibatch B must be nonempty")
    g_t, z_t = estimate_inner(problem, snapshot, x, A, meter=meter)
    df_new = problem.outer_grad_batch(B, g_t).mean(axis=0)
    df_ref = problem.outer_grad_batch(B, snapshot.g_tilde).mean(axis=0)
    if meter is not None:
        meter.add(B.size)
    return snapshot.v_tilde + z_t.T @ df_new - snapshot.z_tilde.T @ df_ref


def unbiased_reference_gradient(problem: CompositionProblem, snapshot: EpochSnapshot, x, B,
                                meter: SampleMeter | None = None) -> np.ndarray:
    """Unbiased gradient estimate using exact inner quantities at x.

    u_t = v~ + mean_{i in B} ( Z(x)^T grad f_i(g(x)) - z~^T grad f_i(g~) ).
    Its mean over B draws is exactly grad F(x).
    """
    B = np.asarray(B)
    if B.size == 0:
        raise ConfigError("outer minibatch B must be nonempty")
    g_x, Z_x = inner_mean(problem, x)
    df_new = problem.outer_grad_batch(B, g_x).mean(axis=0)
    df_ref = problem.outer_grad_batch(B, snapshot.g_tilde).mean(axis=0)
    if meter is not None:
        meter.add(B.size)
    return snapshot.v_tilde + Z_x.T @ df_new - snapshot.z_tilde.T @ df_ref
