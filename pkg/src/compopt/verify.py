"""Empirical checks of the estimator contracts: finite-difference gradient
validation, exhaustive unbiasedness, Monte-Carlo domination of the variance
bounds, and the per-epoch potential contraction proxy.

The variance bounds are one-sided (upper bounds), so the checks assert
domination with a stated slack, never equality. Monte-Carlo slack is 1.05 and
the seed-averaged contraction threshold 0.75 (0.5 + 1e-6 in deterministic
full-batch mode); at the default trial counts the false-failure probability is
negligible.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .estimators import EpochSnapshot, take_snapshot, unbiased_reference_gradient
from .problem import (CompositionProblem, full_gradient, inner_mean,
                      lipschitz_bounds, objective, smooth_value)
from .solver import RunConfig, run_scvrg, step_size

MC_SLACK = 1.05
CONTRACTION_THRESHOLD = 0.75
CONTRACTION_THRESHOLD_DETERMINISTIC = 0.5 + 1e-6


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one check: measured value against its reference bound."""

    name: str
    passed: bool
    measured: float
    bound: float
    trials: int
    seed: int
    skipped: bool = False
    detail: str = ""

    def format_line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        line = (f"[{status}] {self.name}: measured={self.measured:.6g} "
                f"bound={self.bound:.6g} trials={self.trials} seed={self.seed}")
        if self.detail:
            line += f" ({self.detail})"
        return line

    def to_csv_row(self) -> str:
        return (f"{self.name},{str(self.passed).lower()},{self.measured!r},"
                f"{self.bound!r},{self.trials},{self.seed}")


REPORT_HEADER = "name,pass,measured,bound,trials,seed"


def write_report_csv(reports, path):
    with open(path, "w") as fh:
        fh.write(REPORT_HEADER + "\n")
        for report in reports:
            fh.write(report.to_csv_row() + "\n")


# ---------------------------------------------------------------------------
# gradient checks
# ---------------------------------------------------------------------------

def fd_gradient(problem: CompositionProblem, x, h: float | None = None) -> np.ndarray:
    """Central finite differences of the smooth part F."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * (1.0 + np.linalg.norm(x))
    grad = np.zeros_like(x)
    for t in range(x.size):
        e = np.zeros_like(x)
        e[t] = h
        grad[t] = (smooth_value(problem, x + e) - smooth_value(problem, x - e)) / (2 * h)
    return grad


def check_gradient_fd(problem: CompositionProblem, points, h: float | None = None,
                      tol: float = 1e-5, name: str = "gradient_fd",
                      seed: int = 0) -> CheckReport:
    """Max relative error between the analytic gradient and central differences."""
    worst = 0.0
    for x in points:
        analytic = full_gradient(problem, x)
        numeric = fd_gradient(problem, x, h=h)
        scale = max(np.linalg.norm(analytic), 1e-12)
        worst = max(worst, np.linalg.norm(numeric - analytic) / scale)
    return CheckReport(name=name, passed=worst <= tol, measured=worst, bound=tol,
                       trials=len(points), seed=seed)


def check_unbiasedness(problem: CompositionProblem, snapshot: EpochSnapshot, x,
                       b: int = 1, tol: float = 1e-12, seed: int = 0) -> CheckReport:
    """Exhaustive-enumeration mean of the unbiased estimate vs the exact gradient.

    Enumerates all n^b equally likely outer draws; restricted to n <= 4, b <= 2
    so enumeration stays exact.
    """
    n = problem.dims.n
    if n > 4 or b > 2:
        raise ConfigError(f"exhaustive regime requires n <= 4 and b <= 2, got n={n}, b={b}")
    total = np.zeros(problem.dims.d)
    count = 0
    for B in itertools.product(range(n), repeat=b):
        total += unbiased_reference_gradient(problem, snapshot, x, np.array(B))
        count += 1
    mean = total / count
    exact = full_gradient(problem, x)
    rel = np.linalg.norm(mean - exact) / max(np.linalg.norm(exact), 1e-300)
    return CheckReport(name="unbiasedness", passed=rel <= tol, measured=rel,
                       bound=tol, trials=count, seed=seed)


# ---------------------------------------------------------------------------
# Monte-Carlo variance-bound checks
# ---------------------------------------------------------------------------

def _per_index_tables(problem: CompositionProblem, snapshot: EpochSnapshot, x):
    """Precomputed per-index quantities for vectorized Monte-Carlo trials."""
    m, n = problem.dims.m, problem.dims.n
    all_m, all_n = np.arange(m), np.arange(n)
    x_t = snapshot.x_tilde
    Gx = problem.inner_value_batch(all_m, x)
    Gt = problem.inner_value_batch(all_m, x_t)
    Jx = problem.inner_jacobian_batch(all_m, x)
    Jt = problem.inner_jacobian_batch(all_m, x_t)
    g_x, Z_x = inner_mean(problem, x)
    # exact per-i gradient terms at x and at the reference
    hx = problem.outer_grad_batch(all_n, g_x) @ Z_x            # (n, d)
    ht = problem.outer_grad_batch(all_n, snapshot.g_tilde) @ snapshot.z_tilde
    return Gx, Gt, Jx, Jt, hx, ht


def _simulate_vu_sq(problem, snapshot, x, a, b, trials, seed, chunk=20_000):
    """Monte-Carlo mean of ||v_t - u_t||^2 with shared B per paired draw."""
    m, n, d = problem.dims.m, problem.dims.n, problem.dims.d
    Gx, Gt, Jx, Jt, hx, _ = _per_index_tables(problem, snapshot, x)
    dG = Gx - Gt
    dJ = Jx - Jt
    rng = np.random.default_rng(seed)
    acc = 0.0
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        A = rng.integers(0, m, size=(t, a))
        B = rng.integers(0, n, size=(t, b))
        g_t = snapshot.g_tilde + dG[A].mean(axis=1)                 # (t, k)
        z_t = snapshot.z_tilde + dJ[A].mean(axis=1)                 # (t, k, d)
        W = np.empty((n, t, d))
        for i in range(n):
            Df = problem.outer_grad_many(i, g_t)                    # (t, k)
            W[i] = np.einsum("tkd,tk->td", z_t, Df)
        W = W.transpose(1, 0, 2)                                    # (t, n, d)
        v_terms = np.take_along_axis(W, B[:, :, None], axis=1).mean(axis=1)
        u_terms = hx[B].mean(axis=1)
        acc += float(np.sum((v_terms - u_terms) ** 2))
        done += t
    return acc / trials


def check_lemma1(problem: CompositionProblem, snapshot: EpochSnapshot, x,
                 a: int, b: int, trials: int = 100_000, seed: int = 0) -> CheckReport:
    """Domination check for the estimator-coupling variance bound.

    Compares the Monte-Carlo mean of ||v_t - u_t||^2 against
    2 ell^2 ||x - x~||^2 / a; also reports the intermediate-constant form
    2 (L_f^2 ell_g^2 + L_g^4 ell_f^2) ||x - x~||^2 / a.
    """
    consts = lipschitz_bounds(problem, problem.regularizer.radius)
    dist_sq = float(np.sum((np.asarray(x, float) - snapshot.x_tilde) ** 2))
    bound = 2.0 * consts.ell**2 * dist_sq / a
    alt_bound = 2.0 * (consts.L_f**2 * consts.ell_g**2
                       + consts.L_g**4 * consts.ell_f**2) * dist_sq / a
    measured = _simulate_vu_sq(problem, snapshot, x, a, b, trials, seed)
    # absolute floor absorbs accumulation roundoff when x == x~ (bound is 0
    # there but the simulated squared norms are ~eps^2 rather than exact zeros)
    floor = 1e-24 * max(1.0, float(np.sum(snapshot.v_tilde**2)))
    holds_main = measured <= MC_SLACK * bound + floor
    holds_alt = measured <= MC_SLACK * alt_bound + floor
    return CheckReport(name="lemma1_domination", passed=holds_main, measured=measured,
                       bound=bound, trials=trials, seed=seed,
                       detail=f"intermediate-constant bound {alt_bound:.6g} "
                              f"{'holds' if holds_alt else 'violated'}")


def check_lemma1_scaling(problem: CompositionProblem, snapshot: EpochSnapshot, x,
                         a: int, b: int, trials: int = 100_000, seed: int = 0,
                         rel_tol: float = 0.10) -> CheckReport:
    """Doubling a should halve the coupling variance to within rel_tol."""
    small = _simulate_vu_sq(problem, snapshot, x, a, b, trials, seed)
    large = _simulate_vu_sq(problem, snapshot, x, 2 * a, b, trials, seed + 1)
    ratio = small / large
    passed = abs(ratio - 2.0) <= 2.0 * rel_tol
    return CheckReport(name="lemma1_inverse_a_scaling", passed=passed, measured=ratio,
                       bound=2.0, trials=trials, seed=seed,
                       detail=f"relative tolerance {rel_tol:g}")


def check_lemma2(problem: CompositionProblem, snapshot: EpochSnapshot, x,
                 b: int, trials: int = 100_000, seed: int = 0) -> CheckReport:
    """Domination check for the unbiased-estimator variance bound.

    Needs a problem with a certified optimum; the bound mixes objective gaps
    and squared distances at x and the reference.
    """
    if problem.x_star is None or problem.phi_star is None:
        raise ConfigError("lemma2 check requires a problem with a certified optimum")
    n = problem.dims.n
    _, _, _, _, hx, _ = _per_index_tables(problem, snapshot, x)
    grad = hx.mean(axis=0)
    rng = np.random.default_rng(seed)
    B = rng.integers(0, n, size=(trials, b))
    diffs = hx[B].mean(axis=1) - grad
    measured = float(np.mean(np.sum(diffs**2, axis=1)))
    consts = lipschitz_bounds(problem, problem.regularizer.radius)
    ell = consts.ell
    x = np.asarray(x, float)
    xs, ps = problem.x_star, problem.phi_star
    gap_x = objective(problem, x) - ps
    gap_ref = objective(problem, snapshot.x_tilde) - ps
    d_x = float(np.sum((x - xs) ** 2))
    d_ref = float(np.sum((snapshot.x_tilde - xs) ** 2))
    bound = 16.0 * ell * (gap_x + gap_ref) / b + 12.0 * ell**2 * (d_x + d_ref) / b
    passed = measured <= MC_SLACK * bound or (measured == 0.0 and bound >= 0.0)
    return CheckReport(name="lemma2_domination", passed=passed, measured=measured,
                       bound=bound, trials=trials, seed=seed)


def check_combined_bound(problem: CompositionProblem, snapshot: EpochSnapshot, x,
                         a: int, b: int, trials: int = 100_000, seed: int = 0) -> CheckReport:
    """Domination of ||v_t - grad F(x)||^2 by the combined variance bound."""
    if problem.x_star is None or problem.phi_star is None:
        raise ConfigError("combined-bound check requires a certified optimum")
    m, n, d = problem.dims.m, problem.dims.n, problem.dims.d
    Gx, Gt, Jx, Jt, hx, ht = _per_index_tables(problem, snapshot, x)
    grad = hx.mean(axis=0)
    dG, dJ = Gx - Gt, Jx - Jt
    rng = np.random.default_rng(seed)
    acc = 0.0
    done = 0
    while done < trials:
        t = min(20_000, trials - done)
        A = rng.integers(0, m, size=(t, a))
        B = rng.integers(0, n, size=(t, b))
        g_t = snapshot.g_tilde + dG[A].mean(axis=1)
        z_t = snapshot.z_tilde + dJ[A].mean(axis=1)
        W = np.empty((n, t, d))
        for i in range(n):
            Df = problem.outer_grad_many(i, g_t)
            W[i] = np.einsum("tkd,tk->td", z_t, Df)
        W = W.transpose(1, 0, 2)
        v = (snapshot.v_tilde
             + np.take_along_axis(W, B[:, :, None], axis=1).mean(axis=1)
             - ht[B].mean(axis=1))
        acc += float(np.sum((v - grad) ** 2))
        done += t
    measured = acc / trials
    consts = lipschitz_bounds(problem, problem.regularizer.radius)
    ell = consts.ell
    x = np.asarray(x, float)
    xs, ps = problem.x_star, problem.phi_star
    gap_x = objective(problem, x) - ps
    gap_ref = objective(problem, snapshot.x_tilde) - ps
    d_x = float(np.sum((x - xs) ** 2))
    d_ref = float(np.sum((snapshot.x_tilde - xs) ** 2))
    bound = (16.0 * ell * (gap_x + gap_ref) / b
             + (4.0 * ell**2 / a + 12.0 * ell**2 / b) * (d_x + d_ref))
    return CheckReport(name="combined_bound_domination",
                       passed=measured <= MC_SLACK * bound, measured=measured,
                       bound=bound, trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# epoch contraction proxy
# ---------------------------------------------------------------------------

def epoch_potentials(problem: CompositionProblem, config: RunConfig, beta: float,
                     ell: float, x0) -> np.ndarray:
    """Per-epoch composite potential: objective gap plus weighted distance
    terms, evaluated from a full run's epoch diagnostics."""
    if problem.x_star is None or problem.phi_star is None:
        raise ConfigError("contraction check requires a problem with a certified optimum")
    xs, ps = problem.x_star, problem.phi_star
    result = run_scvrg(problem, config, x0)
    values = []
    for s in range(config.S + 1):
        if s == 0:
            x_ref, x_start = np.asarray(x0, float), result.epochs[0].x_start
            eta0 = result.epochs[0].eta_start
        elif s < config.S:
            x_ref, x_start = result.epochs[s - 1].x_avg, result.epochs[s].x_start
            eta0 = result.epochs[s].eta_start
        else:
            x_ref, x_start = result.epochs[-1].x_avg, result.epochs[-1].x_last
            eta0 = (config.eta if config.schedule == "constant"
                    else step_size(config.eta, config.T, result.l_final))
        k_s = config.k0 * 2**s
        value = (objective(problem, x_ref) - ps
                 + 4.5 * beta * ell * float(np.sum((x_ref - xs) ** 2))
                 + 3.0 * float(np.sum((x_start - xs) ** 2)) / (4.0 * eta0 * k_s)
                 + 1.5 * (objective(problem, x_start) - ps) / k_s)
        values.append(value)
    return np.asarray(values)


def check_epoch_contraction(problem: CompositionProblem, config: RunConfig,
                            beta: float, seeds, x0=None,
                            threshold: float | None = None) -> CheckReport:
    """Seed-averaged potential must contract by the threshold factor per epoch.

    The hypotheses a >= 2 ell^2 / beta^2, b >= ell^2 / beta^2 and
    eta <= min(1/(30 beta T ell), 1/(25 ell)) are verified first; a config
    that cannot satisfy them yields a skipped report.
    """
    ell = lipschitz_bounds(problem, problem.regularizer.radius).ell
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"beta must lie in (0, 1), got {beta}")
    deterministic = config.a == problem.dims.m and config.b == problem.dims.n
    if threshold is None:
        threshold = (CONTRACTION_THRESHOLD_DETERMINISTIC if deterministic
                     else CONTRACTION_THRESHOLD)
    eta_max = min(1.0 / (30.0 * beta * config.T * ell), 1.0 / (25.0 * ell))
    reasons = []
    # full enumeration makes the gradient estimate exact, so the batch-size
    # hypotheses (which only control its variance) are vacuous there
    if not deterministic:
        if config.a < 2.0 * ell**2 / beta**2:
            reasons.append(f"a={config.a} < 2 ell^2/beta^2 = {2 * ell**2 / beta**2:.3g}")
        if config.b < ell**2 / beta**2:
            reasons.append(f"b={config.b} < ell^2/beta^2 = {ell**2 / beta**2:.3g}")
    if config.eta > eta_max:
        reasons.append(f"eta={config.eta:.3g} > {eta_max:.3g}")
    if reasons:
        return CheckReport(name="epoch_contraction", passed=False, measured=np.nan,
                           bound=threshold, trials=len(seeds), seed=config.seed,
                           skipped=True, detail="; ".join(reasons))
    if x0 is None:
        x0 = np.full(problem.dims.d, 0.5 * problem.regularizer.radius)
    totals = np.zeros(config.S + 1)
    for seed in seeds:
        cfg = RunConfig(S=config.S, k0=config.k0, eta=config.eta, a=config.a,
                        b=config.b, seed=int(seed), schedule=config.schedule)
        totals += epoch_potentials(problem, cfg, beta, ell, x0)
    averaged = totals / len(seeds)
    ratios = averaged[1:] / averaged[:-1]
    measured = float(np.max(ratios))
    return CheckReport(name="epoch_contraction", passed=measured <= threshold,
                       measured=measured, bound=threshold, trials=len(seeds),
                       seed=config.seed,
                       detail="ratios " + ", ".join(f"{r:.4f}" for r in ratios))


# ---------------------------------------------------------------------------
# aggregate runner (CLI `check` subcommand)
# ---------------------------------------------------------------------------

def run_all_checks(seed: int = 0, trials: int = 20_000, contraction_seeds: int = 20):
    """Standard fixture suite; smaller trial counts than the acceptance tests
    so the CLI stays interactive."""
    from .problems import build_mean_variance, build_toy, random_bellman_spec, build_bellman, synthetic_returns

    reports = []
    rng = np.random.default_rng(seed)

    builders = {
        "toy_identity": build_toy("identity", d=3, m=4, n=3, seed=seed),
        "toy_affine": build_toy("affine", d=3, m=4, n=3, seed=seed),
        "toy_mixed": build_toy("mixed", d=3, m=4, n=2, seed=seed),
        "meanvar": build_mean_variance(synthetic_returns(50, 4, seed), lam=1e-2),
        "bellman": build_bellman(random_bellman_spec(5, 8, 0.9, seed)),
    }
    for label, problem in builders.items():
        R = problem.regularizer.radius
        points = rng.uniform(-0.9 * R, 0.9 * R, size=(20, problem.dims.d))
        reports.append(check_gradient_fd(problem, points, name=f"gradient_fd_{label}",
                                         seed=seed))

    toy = build_toy("affine", d=3, m=4, n=3, seed=seed)
    x_ref = rng.uniform(-0.5, 0.5, size=toy.dims.d)
    x = rng.uniform(-0.5, 0.5, size=toy.dims.d)
    snapshot = take_snapshot(toy, x_ref)
    reports.append(check_unbiasedness(toy, snapshot, x, b=2, seed=seed))
    reports.append(check_lemma1(toy, snapshot, x, a=2, b=2, trials=trials, seed=seed))
    reports.append(check_lemma1_scaling(toy, snapshot, x, a=2, b=2,
                                        trials=max(trials, 50_000), seed=seed))
    reports.append(check_lemma2(toy, snapshot, x, b=2, trials=trials, seed=seed))
    reports.append(check_combined_bound(toy, snapshot, x, a=2, b=2,
                                        trials=trials, seed=seed))

    # the affine toy's estimator genuinely varies with the minibatch draws,
    # unlike the identity toy whose control variates cancel all noise exactly
    contraction_toy = build_toy("affine", d=3, m=12, n=8, seed=seed)
    ell = lipschitz_bounds(contraction_toy, contraction_toy.regularizer.radius).ell
    beta = 0.9
    S = 3
    T = 10 * 2**S - 10
    eta = min(1.0 / (30.0 * beta * T * ell), 1.0 / (25.0 * ell))
    a_min = int(np.ceil(2.0 * ell**2 / beta**2))
    b_min = int(np.ceil(ell**2 / beta**2))
    stochastic = RunConfig(S=S, k0=10, eta=eta, a=a_min, b=b_min, seed=seed)
    deterministic = RunConfig(S=S, k0=10, eta=eta, a=12, b=8, seed=seed)
    reports.append(check_epoch_contraction(contraction_toy, stochastic, beta,
                                           seeds=range(contraction_seeds)))
    reports.append(check_epoch_contraction(contraction_toy, deterministic, beta,
                                           seeds=[seed]))
    return reports


def all_passed(reports) -> bool:
    return all(report.passed or report.skipped for report in reports)
