"""
测量流水线: 逆测量采集 -> m 次平均 -> tau 截断, 以及 m / tau / lambda 的参数策略
"""

import math
from typing import Optional, Tuple, Union

import numpy as np

from config import DEFAULT_C1_SCALE, DEFAULT_C2_SCALE, DEFAULT_C_SCALE, TOL_DEGENERATE_REL
from errors import BudgetTooSmall, DegenerateDirection, PreconditionViolated
from logger import PaqLogger
from models import MetricMatrix, NoiseModel, PipelineConfig, PipelineOutput, RegimeReport
from oracles import sample_query_vector

logger = PaqLogger()

# 谱信息可以是真值 MetricMatrix, 也可以是插值估计 (sigma_r, r) 或 (sigma_r, r, trace)
SpectrumLike = Union[MetricMatrix, Tuple[float, int], Tuple[float, int, float]]


def spectrum_params(spectrum: SpectrumLike) -> Tuple[float, int, float]:
    """返回 (sigma_r, r, trace); 未给出迹时用下界 sigma_r * r"""
    if isinstance(spectrum, MetricMatrix):
        return spectrum.sigma_r, spectrum.rank, spectrum.trace
    if len(spectrum) == 3:
        sigma_r, r, trace = spectrum
        return float(sigma_r), int(r), float(trace)
    sigma_r, r = spectrum
    return float(sigma_r), int(r), float(sigma_r) * int(r)


def plugin_spectrum(pilot: MetricMatrix, rank: Optional[int] = None) -> Tuple[float, int, float]:
    """部署时不知道 Sigma*, 用先导估计的谱代替 (可指定截断秩)"""
    r = pilot.rank if rank is None else min(rank, pilot.rank)
    if r < 1:
        raise PreconditionViolated("先导估计为零矩阵, 无法给出谱信息")
    values = pilot.singular_values[:r]
    return float(values[-1]), r, float(values.sum())


# ================= 采集流水线 =================
def run_pipeline(sigma: MetricMatrix, cfg: PipelineConfig, rng: np.random.Generator) -> PipelineOutput:
    """采集 N 个 PAQ 响应: n = floor(N/m) 个感知向量, 每个向量 m 次响应取平均后截断

    先整块抽取感知向量, 再整块抽取 (n, m) 噪声矩阵; 第 i 行只属于第 i 个向量,
    结果与计算顺序无关。
    """
    n = cfg.n
    if n < 1:
        raise BudgetTooSmall(f"N={cfg.N} 不足以支撑 m={cfg.m} 次平均")
    if cfg.discarded:
        logger.warning(f"N={cfg.N} 不能被 m={cfg.m} 整除, 丢弃 {cfg.discarded} 个测量")
    if sigma.rank <= 8:
        logger.warning(f"rank={sigma.rank} <= 8, 1/(a^T Sigma a) 的四阶矩不存在, 截断可能压不住重尾")

    d = sigma.dim
    A = sample_query_vector(d, rng, n)
    quad = np.einsum('ij,jk,ik->i', A, sigma.matrix, A)
    floor = TOL_DEGENERATE_REL * sigma.sigma_1 * np.einsum('ij,ij->i', A, A)
    bad = np.flatnonzero(quad <= floor)
    if bad.size:
        raise DegenerateDirection(f"第 {int(bad[0])} 个感知向量落在零空间附近")

    eta = cfg.noise.sample(rng, size=(n, cfg.m))
    # 逐个响应求 gamma^2 再平均, 不能先平均噪声
    responses = (cfg.noise.y + eta) / quad[:, None]
    averaged = responses.mean(axis=1)
    truncated = np.minimum(averaged, cfg.tau)
    hits = int(np.count_nonzero(averaged >= cfg.tau))

    logger.debug(f"流水线完成: n={n}, m={cfg.m}, tau={cfg.tau:.4g}, 截断 {hits} 个")
    return PipelineOutput(
        sensing_vectors=A,
        truncated_responses=truncated,
        averaged_responses=averaged,
        truncation_hits=hits,
        noise_means=eta.mean(axis=1),
        tau=cfg.tau,
        m=cfg.m,
        discarded=cfg.discarded,
    )


# ================= 参数策略 =================
def noise_ratio(noise: NoiseModel) -> float:
    """nu^2 / (b_up)^2"""
    return noise.variance / noise.b_up ** 2


def choose_m(noise: NoiseModel, N: int, d: int) -> int:
    """m = max(1, ceil((nu^2/b_up^2)^(2/3) (N/d)^(1/3))); 低噪声区间恰为 1"""
    ratio = noise_ratio(noise)
    threshold = math.sqrt(d / N)
    if ratio <= threshold:
        return 1
    return max(1, math.ceil(ratio ** (2.0 / 3.0) * (N / d) ** (1.0 / 3.0)))


def choose_tau(spectrum: SpectrumLike, noise: NoiseModel, N: int, m: int, d: int) -> float:
    """tau = b_up / (sigma_r r) * sqrt(N / (m d)), 并检查 tau >= mu_b / tr(Sigma*)"""
    sigma_r, r, trace = spectrum_params(spectrum)
    tau = noise.b_up / (sigma_r * r) * math.sqrt(N / (m * d))
    floor = noise.mu_b / trace
    if tau < floor:
        raise PreconditionViolated(f"tau={tau:.4g} < mu_b/tr(Sigma*)={floor:.4g}")
    return tau


def choose_lambda(spectrum: SpectrumLike, noise: NoiseModel, n: int, m: int, d: int,
                  tau: float, c1_scale: float = DEFAULT_C1_SCALE) -> float:
    """lambda_n = C1 [b_up (b_up/(sigma_r r) sqrt(d/n) + (d/n) tau + (b_up/(sigma_r r))^2 / tau)
    + nu^2 / (m sigma_r r)]"""
    sigma_r, r, _ = spectrum_params(spectrum)
    k = noise.b_up / (sigma_r * r)
    bracket = noise.b_up * (k * math.sqrt(d / n) + (d / n) * tau + k ** 2 / tau)
    return c1_scale * (bracket + noise.variance / (m * sigma_r * r))


def sample_size_condition(noise: NoiseModel, N: int, d: int, r: int,
                          c2_scale: float = DEFAULT_C2_SCALE) -> bool:
    """N >= max(2 C2^(3/2) (nu^2/b_up^2) r^(3/2) d, C2 r d)"""
    need = max(2.0 * c2_scale ** 1.5 * noise_ratio(noise) * r ** 1.5 * d, c2_scale * r * d)
    return N >= need


def predicted_rate(sigma: MetricMatrix, noise: NoiseModel, N: int, c_prime: float = 1.0) -> float:
    """误差收敛速率 (常数 C' 由调用方给出): 高噪声 (d/N)^(1/3), 低噪声 (d/N)^(1/2)"""
    d, r = sigma.dim, sigma.rank
    lead = c_prime * sigma.sigma_1 ** 2 / sigma.sigma_r * r ** 1.5 / noise.mu_b ** 2
    if noise_ratio(noise) > math.sqrt(d / N):
        return lead * noise.b_up ** (4.0 / 3.0) * noise.variance ** (1.0 / 3.0) * (d / N) ** (1.0 / 3.0)
    return lead * noise.b_up ** 2 * math.sqrt(d / N)


def error_bound(sigma: MetricMatrix, noise: NoiseModel, lam: float, c_scale: float = DEFAULT_C_SCALE) -> float:
    """C (tr(Sigma*)/mu_b)^2 sqrt(r) lambda_n"""
    return c_scale * (sigma.trace / noise.mu_b) ** 2 * math.sqrt(sigma.rank) * lam


def classify_regime(noise: NoiseModel, N: int, d: int, spectrum: Optional[SpectrumLike] = None,
                    c1_scale: float = DEFAULT_C1_SCALE, c2_scale: float = DEFAULT_C2_SCALE) -> RegimeReport:
    """高噪声 iff nu^2/b_up^2 > sqrt(d/N), 并给出按策略选出的 m, tau, lambda"""
    ratio = noise_ratio(noise)
    threshold = math.sqrt(d / N)
    regime = "high_noise" if ratio > threshold else "low_noise"
    m = choose_m(noise, N, d)
    if spectrum is None:
        # 没有谱信息时只能给出区间与 m
        return RegimeReport(regime, ratio, threshold, m, float("nan"), float("nan"))
    tau = choose_tau(spectrum, noise, N, m, d)
    lam = choose_lambda(spectrum, noise, N // m, m, d, tau, c1_scale)
    _, r, _ = spectrum_params(spectrum)
    ok = sample_size_condition(noise, N, d, r, c2_scale)
    if not ok:
        logger.warning(f"N={N} 不满足样本量条件 (d={d}, r={r}, C2={c2_scale})")
    rate = predicted_rate(spectrum, noise, N) if isinstance(spectrum, MetricMatrix) else float("nan")
    return RegimeReport(regime, ratio, threshold, m, tau, lam, ok, rate)


def policy_config(spectrum: SpectrumLike, noise: NoiseModel, N: int, d: int,
                  m: Optional[int] = None) -> PipelineConfig:
    """按策略 (或给定的 m) 组装流水线配置"""
    m = choose_m(noise, N, d) if m is None else int(m)
    return PipelineConfig(N=N, m=m, tau=choose_tau(spectrum, noise, N, m, d), noise=noise)

