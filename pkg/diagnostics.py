"""
Monte Carlo 诊断: 朴素估计的偏差闭式、逆二次型矩、截断性质审计、尺度等变性
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import MC_BATCHES, DEFAULT_C1_SCALE, SOLVER_MAX_ITERS, SOLVER_REL_TOL
from errors import InvalidDim, PropertyViolated
from estimators import fit_paq
from linalg_core import generate_metric_orthonormal
from logger import PaqLogger
from models import MetricMatrix, MonteCarloReport, NoiseModel, PipelineOutput, SolverConfig, TruncationAudit
from paq_pipeline import choose_lambda, policy_config, run_pipeline

logger = PaqLogger()


def _batch_sizes(S: int, batches: int):
    batches = max(2, min(batches, S))
    base, extra = divmod(S, batches)
    return [base + (1 if i < extra else 0) for i in range(batches)]


def _batch_mean_stats(batch_means: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """批均值法: 总均值与标准误 (逐元素)"""
    mean = np.tensordot(weights, batch_means, axes=(0, 0)) / weights.sum()
    se = batch_means.std(axis=0, ddof=1) / math.sqrt(len(batch_means))
    return mean, se


def _z_score(estimate, target, se) -> float:
    diff = np.abs(np.asarray(estimate, dtype=float) - np.asarray(target, dtype=float))
    se = np.broadcast_to(np.asarray(se, dtype=float), diff.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff == 0, 0.0, diff / se)
    return float(np.max(z))


# ================= 偏差 =================
def bias_monte_carlo(sigma: MetricMatrix, noise: NoiseModel, S: int, rng: np.random.Generator,
                     batches: int = MC_BATCHES) -> MonteCarloReport:
    """E[eta A_inv] = nu^2 E[a a^T / (a^T Sigma* a)] 的 Monte Carlo 估计

    Sigma* = sigma I_d 时闭式为 (nu^2 / (sigma d)) I_d; 其他情况不给目标值。
    """
    d = sigma.dim
    means = []
    sizes = _batch_sizes(S, batches)
    for size in sizes:
        A = rng.standard_normal((size, d))
        eta = noise.sample(rng, size=size)
        quad = np.einsum('ij,jk,ik->i', A, sigma.matrix, A)
        w = eta * (noise.y + eta) / quad
        means.append((A * w[:, None]).T @ A / size)
    estimate, se = _batch_mean_stats(np.array(means), np.array(sizes, dtype=float))

    diag = np.diag(sigma.matrix)
    isotropic = np.array_equal(sigma.matrix, diag[0] * np.eye(d))
    if isotropic:
        target = noise.variance / (diag[0] * d) * np.eye(d)
        provenance = "isotropic closed form nu^2/(sigma d) I"
        z = _z_score(estimate, target, se)
    else:
        target, provenance, z = None, "no closed form for anisotropic Sigma*", float("nan")
    logger.info(f"偏差 Monte Carlo: S={S}, 对角均值 {float(np.mean(np.diag(estimate))):.6g}, z={z:.3g}")
    return MonteCarloReport(estimate, se, S, target, provenance, z)


# ================= 逆矩 =================
def inverse_chi_square_moment(d: int, p: int) -> float:
    """E[(chi^2_d)^(-p)] = prod_{j=1..p} 1/(d - 2j), 仅当 d > 2p 时有限"""
    if p < 1 or d <= 2 * p:
        raise InvalidDim(f"d={d} 时 {p} 阶逆矩不存在 (需要 d > {2 * p})")
    return float(np.prod([1.0 / (d - 2 * j) for j in range(1, p + 1)]))


def _inverse_power_means(quad_of, d: int, p: int, S: int, rng: np.random.Generator, batches: int):
    means = []
    sizes = _batch_sizes(S, batches)
    for size in sizes:
        A = rng.standard_normal((size, d))
        means.append(np.mean(quad_of(A) ** (-p)))
    return _batch_mean_stats(np.array(means), np.array(sizes, dtype=float))


def inverse_moment_check(d: int, p: int, S: int, rng: np.random.Generator,
                         batches: int = MC_BATCHES) -> MonteCarloReport:
    """(1/(a^T a))^p 的样本均值对比逆卡方矩"""
    target = inverse_chi_square_moment(d, p)
    estimate, se = _inverse_power_means(lambda A: np.einsum('ij,ij->i', A, A), d, p, S, rng, batches)
    z = _z_score(estimate, target, se)
    logger.info(f"逆矩检验 d={d}, p={p}: 估计 {float(estimate):.6g}, 目标 {target:.6g}, z={z:.3g}")
    return MonteCarloReport(float(estimate), float(se), S, target, f"inverse chi-square prod 1/(d-2j), d={d}", z)


def inverse_moment_bound(sigma: MetricMatrix, p: int, S: int, rng: np.random.Generator,
                         batches: int = MC_BATCHES) -> MonteCarloReport:
    """一般秩 r 的 Sigma*: a^T Sigma* a >= sigma_r chi^2_r, 只检验上界方向

    z_score 为 (估计 - 上界)/标准误, 为负表示样本均值落在上界之下。
    """
    bound = inverse_chi_square_moment(sigma.rank, p) / sigma.sigma_r ** p
    estimate, se = _inverse_power_means(
        lambda A: np.einsum('ij,jk,ik->i', A, sigma.matrix, A), sigma.dim, p, S, rng, batches)
    z = float((estimate - bound) / se) if se > 0 else 0.0
    return MonteCarloReport(float(estimate), float(se), S, bound, f"upper bound sigma_r^-p prod 1/(r-2j), r={sigma.rank}", z)


# ================= 截断审计 =================
def truncation_audit(out: PipelineOutput) -> TruncationAudit:
    """逐个检查 TP1 (gamma_tilde^2 <= tau), TP2 (gamma_tilde^2 <= gamma_bar^2),
    TP3 (只有 gamma_bar^2 >= tau 时才被截断)"""
    tilde, bar, tau = out.truncated_responses, out.averaged_responses, out.tau
    checks = (
        ("TP1", tilde > tau),
        ("TP2", tilde > bar),
        ("TP3", (bar - tilde > 0) & (bar < tau)),
    )
    for name, violated in checks:
        where = np.flatnonzero(violated)
        if where.size:
            i = int(where[0])
            raise PropertyViolated(name, i, f"(gamma_bar^2={bar[i]:.6g}, gamma_tilde^2={tilde[i]:.6g}, tau={tau:.6g})")
    hits = int(np.count_nonzero(bar >= tau))
    return TruncationAudit(out.n, hits, hits / out.n)


# ================= 尺度等变性 =================
@dataclass
class ScaleScenario:
    d: int = 20
    r: int = 10
    N: int = 4000
    y: float = 200.0
    eta_up: float = 100.0
    seed: int = 0
    c1_scale: float = DEFAULT_C1_SCALE
    m: Optional[int] = None
    max_iters: int = SOLVER_MAX_ITERS
    rel_tol: float = SOLVER_REL_TOL


def scaled_metric(sigma: MetricMatrix, c: float) -> MetricMatrix:
    return MetricMatrix(c * sigma.matrix, sigma.rank, c * sigma.singular_values, c * sigma.trace)


def _solve_scenario(scenario: ScaleScenario, c: float) -> np.ndarray:
    sigma = scaled_metric(
        generate_metric_orthonormal(scenario.d, scenario.r, np.random.default_rng(scenario.seed)), c)
    kind = "uniform" if scenario.eta_up > 0 else "none"
    noise = NoiseModel(kind, scenario.eta_up, scenario.y).scaled(c)
    cfg = policy_config(sigma, noise, scenario.N, scenario.d, scenario.m)
    data = run_pipeline(sigma, cfg, np.random.default_rng(scenario.seed + 1))
    lam = choose_lambda(sigma, noise, cfg.n, cfg.m, scenario.d, cfg.tau, scenario.c1_scale)
    solver = SolverConfig(lam=lam, max_iters=scenario.max_iters, rel_tol=scenario.rel_tol)
    return fit_paq(data, noise.y, solver).estimate.matrix


def scale_equivariance_check(scenario: ScaleScenario, c: float) -> float:
    """共享随机性下按 (y, eta_up, Sigma*) -> c (y, eta_up, Sigma*) 重跑, 返回
    |Sigma_hat_c - c Sigma_hat|_F / (c |Sigma_hat|_F)"""
    if not c > 0:
        raise ValueError(f"尺度 c 必须为正: {c}")
    base = _solve_scenario(scenario, 1.0)
    scaled = _solve_scenario(scenario, c)
    denom = c * float(np.linalg.norm(base, 'fro'))
    gap = float(np.linalg.norm(scaled - c * base, 'fro'))
    deviation = gap / denom if denom > 0 else gap
    logger.info(f"尺度等变性 c={c}: 相对偏差 {deviation:.3e}")
    return deviation
