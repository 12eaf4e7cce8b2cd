#!/usr/bin/env python3
"""
测试脚本 - 凸估计器 (近端梯度与次梯度)
"""

import math
import os
import sys
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from errors import ZeroMatrix, ZeroResponse
from estimators import (
    RankOneRegression, cross_validate_c1, fit_pairwise, fit_paq, fit_paq_direct, fit_paq_naive,
    fit_ranking, fit_triplet, normalize_unit_fro, oracle_lambda, ranking_triplets, solve_trace_regression,
)
from linalg_core import as_metric, generate_metric_orthonormal, is_psd, normalized_error
from models import NoiseModel, PaqResponse, PipelineConfig, SolverConfig
from oracles import paq_respond, pairwise_oracle, ranking_oracle, triplet_oracle
from paq_pipeline import choose_lambda, policy_config, run_pipeline


def _direct_responses(sigma, N, y, rng):
    noise = NoiseModel("none", 0.0, y)
    return [paq_respond(sigma, rng.standard_normal(sigma.dim), noise) for _ in range(N)]


def test_noiseless_direct_recovery():
    rng = np.random.default_rng(0)
    sigma = generate_metric_orthonormal(4, 2, rng)
    responses = _direct_responses(sigma, 200, 10.0, rng)
    result = fit_paq_direct(responses, 10.0, SolverConfig(lam=0.0, max_iters=5000, rel_tol=1e-14))
    assert normalized_error(result.estimate, sigma) < 1e-3
    assert is_psd(result.estimate.matrix)


def test_objective_is_monotone():
    rng = np.random.default_rng(1)
    sigma = generate_metric_orthonormal(6, 2, rng)
    noise = NoiseModel("uniform", 10.0, 200.0)
    cfg = policy_config(sigma, noise, 3000, 6)
    data = run_pipeline(sigma, cfg, rng)
    lam = choose_lambda(sigma, noise, cfg.n, cfg.m, 6, cfg.tau)
    result = fit_paq(data, 200.0, SolverConfig(lam=lam))
    trace = np.array(result.objective_trace)
    assert np.all(np.diff(trace) <= 1e-12 * np.abs(trace[:-1]))
    assert result.iterations >= 1
    assert result.residual >= 0.0


def test_matches_closed_form_least_squares():
    """无正则且最小二乘解为正定时, 约束解等于普通最小二乘解"""
    rng = np.random.default_rng(2)
    d, N = 3, 300
    truth = np.array([[3.0, 0.5, 0.0], [0.5, 2.0, 0.3], [0.0, 0.3, 1.5]])
    A = rng.standard_normal((N, d))
    t = np.einsum('ij,jk,ik->i', A, truth, A) + 0.1 * rng.standard_normal(N)

    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    X = np.column_stack([A[:, i] * A[:, j] * (1.0 if i == j else 2.0) for i, j in pairs])
    coef, *_ = np.linalg.lstsq(X, t, rcond=None)
    expected = np.zeros((d, d))
    for (i, j), c in zip(pairs, coef):
        expected[i, j] = expected[j, i] = c
    assert np.all(np.linalg.eigvalsh(expected) > 0)

    problem = RankOneRegression(A, np.ones(N), t)
    result = solve_trace_regression(problem, SolverConfig(lam=0.0, max_iters=20000, rel_tol=1e-15))
    assert np.allclose(result.estimate.matrix, expected, atol=1e-5)


def test_large_lambda_gives_zero():
    rng = np.random.default_rng(3)
    sigma = generate_metric_orthonormal(4, 2, rng)
    responses = _direct_responses(sigma, 50, 1.0, rng)
    result = fit_paq_direct(responses, 1.0, SolverConfig(lam=1e6))
    assert np.allclose(result.estimate.matrix, 0.0)


def test_naive_fit_uses_raw_responses():
    rng = np.random.default_rng(4)
    sigma = generate_metric_orthonormal(4, 4, rng)
    noise = NoiseModel("uniform", 1.0, 100.0)
    responses = [paq_respond(sigma, rng.standard_normal(4), noise, rng) for _ in range(400)]
    result = fit_paq_naive(responses, 100.0, SolverConfig(lam=0.0))
    assert normalized_error(result.estimate, sigma) < 0.1


def test_zero_response_rejected():
    resp = PaqResponse(np.ones(2), 0.0, 0.0)
    with pytest.raises(ZeroResponse):
        fit_paq_direct([resp], 1.0, SolverConfig())


def test_oracle_lambda_and_cross_validation():
    rng = np.random.default_rng(5)
    sigma = generate_metric_orthonormal(5, 2, rng)
    noise = NoiseModel("uniform", 20.0, 100.0)
    cfg = policy_config(sigma, noise, 1000, 5)
    data = run_pipeline(sigma, cfg, rng)
    assert oracle_lambda(data, sigma, 100.0) > 0.0
    lam_of = lambda c1, n: choose_lambda(sigma, noise, n, cfg.m, 5, cfg.tau, c1)
    best, scores = cross_validate_c1(data, 100.0, lam_of, [0.01, 1.0], SolverConfig(max_iters=500), folds=3)
    assert best in (0.01, 1.0)
    assert set(scores) == {0.01, 1.0}


def test_pairwise_hinge_decreases():
    rng = np.random.default_rng(6)
    sigma = generate_metric_orthonormal(4, 2, rng)
    outcomes = [pairwise_oracle(sigma, rng.standard_normal(4), rng.standard_normal(4), 8.0) for _ in range(100)]
    result = fit_pairwise(outcomes, 8.0, SolverConfig(lam=0.01), max_iters=300)
    assert result.objective_trace[0] == pytest.approx(8.0)
    assert result.objective_trace[-1] < result.objective_trace[0]
    assert all(b <= a for a, b in zip(result.objective_trace, result.objective_trace[1:]))


def test_triplet_duplicates_share_difference_vectors():
    rng = np.random.default_rng(7)
    sigma = generate_metric_orthonormal(3, 2, rng)
    x = [rng.standard_normal(3) for _ in range(3)]
    once = fit_triplet([triplet_oracle(sigma, *x)], SolverConfig(lam=0.0), max_iters=50)
    twice = fit_triplet([triplet_oracle(sigma, *x)] * 2, SolverConfig(lam=0.0), max_iters=50)
    assert np.allclose(once.estimate.matrix, twice.estimate.matrix)


def test_ranking_decomposition():
    rng = np.random.default_rng(8)
    sigma = generate_metric_orthonormal(3, 2, rng)
    queries = []
    for _ in range(5):
        x0 = rng.standard_normal(3)
        items = list(rng.standard_normal((4, 3)))
        queries.append((x0, items, ranking_oracle(sigma, x0, items)))
    assert len(ranking_triplets(queries)) == 5 * 6
    result = fit_ranking(queries, SolverConfig(lam=0.01), max_iters=100)
    assert is_psd(result.estimate.matrix)


def test_normalize_unit_fro():
    est = normalize_unit_fro(np.diag([3.0, 4.0]))
    assert math.isclose(est.fro_norm, 1.0)
    with pytest.raises(ZeroMatrix):
        normalize_unit_fro(as_metric(np.zeros((2, 2))))


def _least_squares_reference(data, y):
    """正规方程的最小二乘解 (上三角参数化, 用 lstsq 求解)"""
    d = data.d
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    A, g = data.sensing_vectors, data.truncated_responses
    X = np.column_stack([g * A[:, i] * A[:, j] * (1.0 if i == j else 2.0) for i, j in pairs])
    coef, *_ = np.linalg.lstsq(X, np.full(len(g), y), rcond=None)
    expected = np.zeros((d, d))
    for (i, j), c in zip(pairs, coef):
        expected[i, j] = expected[j, i] = c
    return expected


def test_unregularized_fit_matches_least_squares_on_small_instances():
    noise = NoiseModel("none", 0.0, 10.0)
    for seed in range(50):
        d = 2 + seed % 4
        r = 1 + seed % d
        rng = np.random.default_rng(seed)
        sigma = generate_metric_orthonormal(d, r, rng)
        n = 3 * d * (d + 1) // 2
        data = run_pipeline(sigma, PipelineConfig(N=n, m=1, tau=math.inf, noise=noise), rng)
        result = fit_paq(data, 10.0, SolverConfig(lam=0.0))
        expected = _least_squares_reference(data, 10.0)
        assert np.linalg.norm(result.estimate.matrix - expected, 'fro') <= 1e-6, f"seed={seed}"


def test_converged_solution_has_small_fixed_point_residual():
    rng = np.random.default_rng(9)
    sigma = generate_metric_orthonormal(6, 6, rng)
    noise = NoiseModel("uniform", 50.0, 100.0)
    cfg = policy_config(sigma, noise, 2000, 6)
    data = run_pipeline(sigma, cfg, rng)
    lam = choose_lambda(sigma, noise, cfg.n, cfg.m, 6, cfg.tau, 0.03)
    result = fit_paq(data, 100.0, SolverConfig(lam=lam, max_iters=20000, rel_tol=1e-14))
    assert result.converged
    assert result.residual <= 1e-6 * max(1.0, result.estimate.fro_norm)


def test_solver_is_exact_at_tiny_scale():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((200, 4))
    truth = np.diag([2.0, 1.0, 0.0, 0.0])
    t = np.einsum('ij,jk,ik->i', A, truth, A) + 0.1 * rng.standard_normal(200)
    c = 2.0 ** -60
    cfg = SolverConfig(lam=0.05, rel_tol=1e-12)
    base = solve_trace_regression(RankOneRegression(A, np.ones(200), t), cfg)
    tiny = solve_trace_regression(RankOneRegression(A, np.ones(200), c * t), SolverConfig(lam=0.05 * c, rel_tol=1e-12))
    assert np.allclose(tiny.estimate.matrix / c, base.estimate.matrix, rtol=1e-8, atol=1e-10)


def test_naive_fit_equals_pipeline_fit_without_averaging():
    rng = np.random.default_rng(11)
    sigma = generate_metric_orthonormal(5, 2, rng)
    noise = NoiseModel("none", 0.0, 20.0)
    data = run_pipeline(sigma, PipelineConfig(N=300, m=1, tau=math.inf, noise=noise), rng)
    responses = [PaqResponse(a, g, 0.0) for a, g in zip(data.sensing_vectors, data.averaged_responses)]
    cfg = SolverConfig(lam=0.01)
    assert np.array_equal(fit_paq(data, 20.0, cfg).estimate.matrix,
                          fit_paq_naive(responses, 20.0, cfg).estimate.matrix)


def test_naive_error_plateaus_while_averaging_removes_bias():
    """y = eta_up = 200: 朴素逆测量收缩到约 0.75 Sigma*, 加大 N 不再改善; m = 16 平均后偏差基本消失"""
    noise = NoiseModel("uniform", 200.0, 200.0)
    sigma = generate_metric_orthonormal(5, 5, np.random.default_rng(12))
    cfg = SolverConfig(lam=0.0)

    def error(N, m, seed):
        data = run_pipeline(sigma, PipelineConfig(N=N, m=m, tau=math.inf, noise=noise), np.random.default_rng(seed))
        return normalized_error(fit_paq(data, 200.0, cfg).estimate, sigma)

    naive_small, naive_large = error(4000, 1, 13), error(8000, 1, 14)
    averaged = error(8000, 16, 15)
    assert naive_large > 0.15
    assert naive_large > 0.9 * naive_small
    assert averaged < 0.5 * naive_large


def test_hinge_honors_solver_budget():
    rng = np.random.default_rng(16)
    sigma = generate_metric_orthonormal(4, 2, rng)
    outcomes = [pairwise_oracle(sigma, rng.standard_normal(4), rng.standard_normal(4), 8.0) for _ in range(50)]
    result = fit_pairwise(outcomes, 8.0, SolverConfig(lam=0.01, max_iters=7))
    assert result.iterations == 7
    assert len(result.objective_trace) == 7
    triplets = [triplet_oracle(sigma, *rng.standard_normal((3, 4))) for _ in range(50)]
    assert fit_triplet(triplets, SolverConfig(lam=0.01, max_iters=9)).iterations == 9


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
