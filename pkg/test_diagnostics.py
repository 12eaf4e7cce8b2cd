#!/usr/bin/env python3
"""
测试脚本 - Monte Carlo 诊断 (样本数比命令行默认值小)
"""

import os
import sys
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from diagnostics import (
    ScaleScenario, bias_monte_carlo, inverse_chi_square_moment, inverse_moment_bound,
    inverse_moment_check, scale_equivariance_check, truncation_audit,
)
from errors import InvalidDim, PropertyViolated
from linalg_core import generate_metric_orthonormal, isotropic_metric
from models import NoiseModel, PipelineConfig
from paq_pipeline import run_pipeline

S = 200_000


def test_inverse_chi_square_closed_form():
    assert inverse_chi_square_moment(10, 1) == pytest.approx(1 / 8)
    assert inverse_chi_square_moment(10, 4) == pytest.approx(1 / 384)
    with pytest.raises(InvalidDim):
        inverse_chi_square_moment(9, 4)


def test_inverse_moment_monte_carlo():
    report = inverse_moment_check(10, 1, S, np.random.default_rng(0))
    assert report.target == pytest.approx(0.125)
    assert report.z_score <= 5.0
    assert abs(report.estimate - 0.125) < 0.01


def test_isotropic_bias_matches_closed_form():
    noise = NoiseModel("uniform", 12.0, 12.0)
    report = bias_monte_carlo(isotropic_metric(10), noise, S, np.random.default_rng(1))
    # nu^2 = 48, 目标 (48 / 10) I
    assert np.allclose(report.target, 4.8 * np.eye(10))
    assert report.z_score <= 5.0


def test_zero_noise_has_no_bias():
    report = bias_monte_carlo(isotropic_metric(10), NoiseModel("none", 0.0, 12.0), 10_000,
                              np.random.default_rng(2))
    assert np.array_equal(report.estimate, np.zeros((10, 10)))
    assert report.z_score == 0.0


def test_anisotropic_bias_has_no_target():
    sigma = generate_metric_orthonormal(6, 6, np.random.default_rng(3))
    sigma.matrix[0, 0] += 1.0
    report = bias_monte_carlo(sigma, NoiseModel("uniform", 1.0, 2.0), 1000, np.random.default_rng(4))
    assert report.target is None


def test_general_rank_upper_bound():
    sigma = generate_metric_orthonormal(30, 12, np.random.default_rng(5))
    report = inverse_moment_bound(sigma, 1, S, np.random.default_rng(6))
    assert report.estimate <= report.target + 5 * report.standard_error


def test_truncation_audit():
    sigma = generate_metric_orthonormal(10, 9, np.random.default_rng(7))
    noise = NoiseModel("uniform", 200.0, 200.0)
    out = run_pipeline(sigma, PipelineConfig(N=4000, m=2, tau=0.3, noise=noise), np.random.default_rng(8))
    audit = truncation_audit(out)
    assert audit.n == 2000
    assert audit.hits == out.truncation_hits
    out.truncated_responses[3] = out.tau * 2
    with pytest.raises(PropertyViolated) as info:
        truncation_audit(out)
    assert info.value.prop == "TP1"
    assert info.value.index == 3


def test_scale_equivariance():
    scenario = ScaleScenario(d=6, r=3, N=600, y=100.0, eta_up=50.0, seed=11, max_iters=300)
    for c in (0.01, 7.3):
        assert scale_equivariance_check(scenario, c) <= 1e-6


def test_bias_scales_with_noise_variance():
    sigma = isotropic_metric(6)
    small = bias_monte_carlo(sigma, NoiseModel("uniform", 3.0, 12.0), S, np.random.default_rng(12))
    large = bias_monte_carlo(sigma, NoiseModel("uniform", 6.0, 12.0), S, np.random.default_rng(13))
    assert np.all(np.diag(small.estimate) > 0)
    ratio = np.mean(np.diag(large.estimate)) / np.mean(np.diag(small.estimate))
    assert ratio == pytest.approx(4.0, rel=0.1)


def test_inverse_moment_decreases_with_dimension():
    estimates = [inverse_moment_check(d, 1, 50_000, np.random.default_rng(d)).estimate for d in (5, 10, 20, 50)]
    assert all(a > b for a, b in zip(estimates, estimates[1:]))


def test_truncation_extremes():
    sigma = generate_metric_orthonormal(10, 9, np.random.default_rng(14))
    noise = NoiseModel("uniform", 5.0, 10.0)
    free = run_pipeline(sigma, PipelineConfig(N=500, m=1, tau=float("inf"), noise=noise), np.random.default_rng(15))
    assert truncation_audit(free).hits == 0
    assert np.array_equal(free.truncated_responses, free.averaged_responses)
    tight = run_pipeline(sigma, PipelineConfig(N=500, m=1, tau=1e-12, noise=noise), np.random.default_rng(15))
    assert truncation_audit(tight).hit_rate == 1.0
    assert np.all(tight.truncated_responses == 1e-12)


def test_unit_scale_is_exact():
    scenario = ScaleScenario(d=5, r=2, N=300, y=50.0, eta_up=10.0, seed=3, max_iters=100)
    assert scale_equivariance_check(scenario, 1.0) == 0.0


def test_fourth_inverse_moment_monte_carlo():
    report = inverse_moment_check(10, 4, 1_000_000, np.random.default_rng(16))
    assert report.target == pytest.approx(1 / 384)
    assert abs(report.z_score) <= 5.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
