"""Tests for the benchmark harness: phi* computation, caching, CSV emission."""

import numpy as np
import pytest

from compopt.errors import ConfigError, InputError
from compopt.harness import (ExperimentSpec, cached_phi_star, compute_phi_star,
                             problem_fingerprint, run_benchmark, run_one,
                             scvrg_config_for_budget)
from compopt.problems import (build_bellman, build_mean_variance, build_toy,
                              random_bellman_spec, synthetic_returns)
from compopt.solver import predicted_total_samples
from compopt.trace import TRACE_HEADER


class TestExperimentSpec:
    def make(self, **kw):
        kwargs = dict(problem=build_toy("identity", d=2, m=3, n=3, seed=0),
                      algorithms=["scvrg"], budget=10.0, seeds=[0], out="t.csv")
        kwargs.update(kw)
        return ExperimentSpec(**kwargs)

    def test_valid(self):
        self.make()

    def test_rejects_bad_budget(self):
        with pytest.raises(ConfigError):
            self.make(budget=0.0)

    def test_rejects_unknown_algorithm(self):
        with pytest.raises(InputError):
            self.make(algorithms=["sgd"])

    def test_rejects_empty_seeds(self):
        with pytest.raises(ConfigError):
            self.make(seeds=[])


class TestComputePhiStar:
    def test_identity_toy_matches_closed_form(self):
        toy = build_toy("identity", d=3, m=6, n=5, seed=0, lam=0.05)
        got = compute_phi_star(toy, budget=100_000)
        assert abs(got - toy.phi_star) <= 1e-10

    def test_bellman_matches_linear_solve(self):
        p = build_bellman(random_bellman_spec(4, 6, 0.9, seed=1))
        got = compute_phi_star(p, budget=100_000)
        assert abs(got - p.phi_star) <= 1e-10

    def test_affine_unregularized_matches_lstsq_value(self):
        toy = build_toy("affine", d=3, m=4, n=4, seed=2, lam=0.0)
        got = compute_phi_star(toy, budget=100_000)
        assert abs(got - toy.phi_star) <= 1e-10

    def test_budget_floor_enforced(self):
        toy = build_toy("identity", d=2, m=3, n=3, seed=0)
        with pytest.raises(ConfigError):
            compute_phi_star(toy, budget=10)


class TestPhiStarCache:
    def test_cache_roundtrip(self, tmp_path):
        toy = build_toy("identity", d=2, m=3, n=3, seed=0)
        v1 = cached_phi_star(toy, 10_000, cache_dir=str(tmp_path))
        v2 = cached_phi_star(toy, 10_000, cache_dir=str(tmp_path))
        assert v1 == v2
        assert len(list(tmp_path.glob("phistar_*.json"))) == 1

    def test_fingerprint_distinguishes_lambda(self):
        ds = synthetic_returns(10, 2, seed=0)
        a = problem_fingerprint(build_mean_variance(ds, lam=0.0))
        b = problem_fingerprint(build_mean_variance(ds, lam=0.1))
        assert a != b

    def test_fingerprint_distinguishes_data(self):
        a = problem_fingerprint(build_mean_variance(synthetic_returns(10, 2, seed=0)))
        b = problem_fingerprint(build_mean_variance(synthetic_returns(10, 2, seed=1)))
        assert a != b


class TestScvrgConfigForBudget:
    def test_fits_budget(self):
        p = build_mean_variance(synthetic_returns(50, 3, seed=0))
        cfg = scvrg_config_for_budget(p, max_samples=5000, seed=0)
        assert predicted_total_samples(cfg, 50, 50) <= 5000
        bigger = type(cfg)(S=cfg.S + 1, k0=cfg.k0, eta=cfg.eta, a=cfg.a, b=cfg.b)
        assert predicted_total_samples(bigger, 50, 50) > 5000


class TestRunBenchmark:
    def test_csv_schema_and_determinism(self, tmp_path):
        p = build_mean_variance(synthetic_returns(60, 4, seed=0), lam=1e-2)
        out = str(tmp_path / "trace.csv")
        spec = ExperimentSpec(problem=p, algorithms=["scvrg", "scgd"],
                              budget=10.0, seeds=[1, 2], out=out,
                              phi_star_budget=50_000)
        run_benchmark(spec)
        first = open(out).read()
        run_benchmark(spec)
        second = open(out).read()
        assert first == second  # bit-identical rerun
        lines = first.strip().split("\n")
        assert lines[0] == TRACE_HEADER
        assert lines[0] == "algorithm,seed,epoch,iter,samples,samples_per_N,objective,gap"

    def test_four_runs_monotone_samples(self, tmp_path):
        p = build_mean_variance(synthetic_returns(60, 4, seed=0), lam=1e-2)
        out = str(tmp_path / "trace.csv")
        spec = ExperimentSpec(problem=p, algorithms=["scvrg", "scgd"],
                              budget=10.0, seeds=[1, 2], out=out,
                              phi_star_budget=50_000)
        run_benchmark(spec)
        rows = [line.split(",") for line in open(out).read().strip().split("\n")[1:]]
        runs = {}
        for r in rows:
            runs.setdefault((r[0], r[1]), []).append(int(r[4]))
        assert len(runs) == 4
        for samples in runs.values():
            assert samples == sorted(samples)

    def test_gap_nonnegative_after_polish(self, tmp_path):
        toy = build_toy("identity", d=2, m=5, n=5, seed=3, lam=0.02)
        out = str(tmp_path / "trace.csv")
        spec = ExperimentSpec(problem=toy, algorithms=["scvrg", "agd"],
                              budget=200.0, seeds=[0], out=out,
                              phi_star_budget=50_000)
        run_benchmark(spec)
        gaps = [float(line.split(",")[7])
                for line in open(out).read().strip().split("\n")[1:]]
        assert min(gaps) >= -1e-9

    def test_medium_profile_under_a_minute(self, tmp_path):
        import time
        p = build_mean_variance(synthetic_returns(7240, 25, seed=0), lam=1e-2)
        start = time.time()
        x, trace = run_one(p, "scvrg", 0, 30 * p.N, phi_star=None)
        assert time.time() - start < 60.0
        assert trace[-1].samples <= 30 * p.N


class TestRunOne:
    def test_unknown_parameter_rejected(self):
        toy = build_toy("identity", d=2, m=3, n=3, seed=0)
        with pytest.raises(ConfigError):
            run_one(toy, "scvrg", 0, 1000, params={"bogus": 1})

    def test_epoch_override(self):
        toy = build_toy("identity", d=2, m=3, n=3, seed=0)
        _, trace = run_one(toy, "scvrg", 0, 100_000, params={"S": 2})
        assert max(r.epoch for r in trace) == 2
