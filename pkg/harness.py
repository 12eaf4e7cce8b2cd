"""
实验编排: 配置加载、可复现种子、试验调度、聚合、CSV 与 SVG 输出
"""

import copy
import csv
import json
import math
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import (
    EXPERIMENT_DEFAULTS, DEFAULT_MASTER_SEED, OUTPUT_DIR, CSV_HEADER, CSV_FLOAT_DIGITS,
    SVG_HASH_SALT, QUERY_TYPES, MC_SAMPLES, MC_Z_LIMIT, SCALE_CHECK_FACTORS, SCALE_CHECK_LIMIT,
    C1_CV_GRID, C1_CV_MAX_ITERS,
)
from diagnostics import (
    ScaleScenario, bias_monte_carlo, inverse_moment_bound, inverse_moment_check,
    scale_equivariance_check, truncation_audit,
)
from errors import ConfigError, InvalidDim, IoError, PreconditionViolated, PropertyViolated
from estimators import (
    cross_validate_c1, fit_pairwise, fit_paq, fit_paq_direct, fit_paq_naive, fit_ranking, fit_triplet,
    normalize_unit_fro, oracle_lambda,
)
from linalg_core import (
    generate_metric_orthonormal, generate_metric_wishart, isotropic_metric, normalized_error,
)
from logger import PaqLogger
from models import ExperimentConfig, NoiseModel, PaqResponse, PipelineConfig, SolverConfig, TrialRecord
from oracles import paq_respond, pairwise_oracle, ranking_oracle, sample_query_vector, triplet_oracle
from paq_pipeline import (
    choose_lambda, choose_tau, classify_regime, error_bound, plugin_spectrum, policy_config, run_pipeline,
)

logger = PaqLogger()

_MASK64 = (1 << 64) - 1


# ================= 配置 =================
def load_config(path: Optional[str], experiment: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """读取 JSON 配置: 键必须是 ExperimentConfig 字段, 缺省值来自 config.EXPERIMENT_DEFAULTS"""
    raw: Dict[str, Any] = {}
    if path:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
        except OSError as e:
            raise ConfigError(f"无法读取配置文件 {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"配置文件不是合法 JSON {path}: {e}")
        if not isinstance(raw, dict):
            raise ConfigError("配置文件顶层必须是 JSON 对象")

    fields = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - fields)
    if unknown:
        raise ConfigError(f"配置文件包含未知键: {', '.join(unknown)}")

    experiment = raw.get("experiment", experiment)
    if experiment not in EXPERIMENT_DEFAULTS:
        raise ConfigError(f"未知实验类型: {experiment}")
    values = copy.deepcopy(EXPERIMENT_DEFAULTS[experiment])
    values.update({"experiment": experiment, "master_seed": DEFAULT_MASTER_SEED, "output_dir": OUTPUT_DIR})
    values.update(raw)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    expected = {"experiment": str, "grid": dict, "y": (int, float), "eta_up": (int, float), "trials": int,
                "master_seed": int, "lambda_scale": (int, float), "output_dir": str}
    for key, kind in expected.items():
        if isinstance(values[key], bool) or not isinstance(values[key], kind):
            raise ConfigError(f"配置项 {key} 类型错误: {values[key]!r}")
    return ExperimentConfig(**values)


# ================= 种子 =================
def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _words(token) -> List[int]:
    if isinstance(token, str):
        data = token.encode('utf-8')
        data += b'\0' * (-len(data) % 8)
        return [len(token)] + [int.from_bytes(data[i:i + 8], 'little') for i in range(0, len(data), 8)]
    if isinstance(token, float):
        return [struct.unpack('<Q', struct.pack('<d', token))[0]]
    return [int(token) & _MASK64]


def derive_trial_seed(master_seed: int, experiment: str, coordinates: Sequence) -> int:
    """splitmix64 终混函数逐个吸收 (实验名, 坐标...), 得到 64 位种子"""
    h = _splitmix64(master_seed & _MASK64)
    for token in (experiment, *coordinates):
        for word in _words(token):
            h = _splitmix64(h ^ word)
    return h


# ================= 网格 =================
def grid_points(cfg: ExperimentConfig) -> List[Tuple[int, int, int, Optional[int]]]:
    """展开为 (N, d, r, m) 列表; 有 N_over_d 时 N = N_over_d * d, m 为 None 表示按策略选择"""
    grid = cfg.grid
    ds = [int(v) for v in grid.get("d", [])]
    rs = [int(v) for v in grid.get("r", [])]
    ms = [int(v) for v in grid.get("m", [])] or [None]
    if not ds or not rs:
        raise ConfigError("网格必须给出 d 与 r")
    points = []
    for d in ds:
        if "N_over_d" in grid:
            Ns = [int(round(v * d)) for v in grid["N_over_d"]]
        elif "N" in grid:
            Ns = [int(v) for v in grid["N"]]
        else:
            raise ConfigError("网格必须给出 N 或 N_over_d")
        for r in rs:
            if r > d:
                raise ConfigError(f"网格中 r={r} 大于 d={d}")
            for N in Ns:
                for m in ms:
                    points.append((N, d, r, m))
    return points


# ================= 单次试验 =================
def _solver_config(lam: float) -> SolverConfig:
    return SolverConfig(lam=lam)


def compare_trial(query_type: str, N: int, d: int, r: int, y: float, lam: float,
                  seed: int, experiment: str = "compare_queries", trial: int = 0) -> TrialRecord:
    """无噪声查询对比: 同一种子先生成 Sigma* = L L^T/|L L^T|_F, 再生成查询"""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    sigma = generate_metric_wishart(d, r, rng)
    solver = _solver_config(lam)

    if query_type == "pairwise":
        X1, X2 = sample_query_vector(d, rng, N), sample_query_vector(d, rng, N)
        outcomes = [pairwise_oracle(sigma, X1[i], X2[i], y) for i in range(N)]
        result = fit_pairwise(outcomes, y, solver)
    elif query_type == "triplet":
        X1, X2, X3 = (sample_query_vector(d, rng, N) for _ in range(3))
        outcomes = [triplet_oracle(sigma, X1[i], X2[i], X3[i]) for i in range(N)]
        result = fit_triplet(outcomes, solver)
    elif query_type.startswith("ranking-"):
        k = int(query_type.split("-", 1)[1])
        queries = []
        for _ in range(N):
            x0 = sample_query_vector(d, rng)
            items = list(sample_query_vector(d, rng, k))
            queries.append((x0, items, ranking_oracle(sigma, x0, items)))
        result = fit_ranking(queries, solver)
    elif query_type == "paq-direct":
        noise = NoiseModel("none", 0.0, y)
        A = sample_query_vector(d, rng, N)
        responses = [paq_respond(sigma, A[i], noise) for i in range(N)]
        result = fit_paq_direct(responses, y, solver)
    else:
        raise ConfigError(f"未知查询类型: {query_type}")

    if result.estimate.fro_norm == 0.0:
        # 零估计没有方向信息, 归一化误差记为 |0 - Sigma*|_F / |Sigma*|_F = 1
        logger.warning(f"{query_type} N={N} d={d} trial={trial} 的估计为零矩阵, 误差记为 1")
        error = 1.0
    else:
        error = normalized_error(normalize_unit_fro(result.estimate), sigma)
    return TrialRecord(experiment, query_type, N, d, r, 1, math.inf, lam, trial, seed,
                       error, time.perf_counter() - start, 0)


def _log_theory(sigma, noise: NoiseModel, data, N: int, d: int, lam: float, c1_scale: float,
                estimate) -> None:
    """把区间判定、误差上界、oracle lambda 与插值谱下的 lambda 记入 DEBUG 日志"""
    if not logger.is_debug():
        return
    report = classify_regime(noise, N, d, sigma, c1_scale)
    logger.debug(f"N={N} d={d} r={sigma.rank}: {report.regime}, 噪声比 {report.noise_ratio:.4g} "
                 f"(阈值 {report.threshold:.4g}), 样本量条件 {'满足' if report.sample_size_ok else '不满足'}, "
                 f"误差上界 {error_bound(sigma, noise, lam):.4g}, 速率 {report.predicted_rate:.4g}")
    logger.debug(f"lambda={lam:.4g}, oracle lambda={oracle_lambda(data, sigma, noise.y):.4g}")
    if estimate.rank >= 1:
        plug = plugin_spectrum(estimate, sigma.rank)
        try:
            plug_tau = choose_tau(plug, noise, data.n * data.m, data.m, d)
        except PreconditionViolated as e:
            logger.debug(f"插值谱下 tau 不可用: {e}")
            return
        logger.debug(f"插值谱 (sigma_r={plug[0]:.4g}, r={plug[1]}) 下 tau={plug_tau:.4g}, lambda="
                     f"{choose_lambda(plug, noise, data.n, data.m, d, plug_tau, c1_scale):.4g}")


def paq_trial(query_type: str, N: int, d: int, r: int, m: Optional[int], noise: NoiseModel,
              c1_scale: float, seed: int, experiment: str, trial: int = 0,
              lam: Optional[float] = None) -> TrialRecord:
    """流水线 + 估计器; Sigma* = (d/sqrt(r)) U U^T, 误差不归一化

    paq: 按策略 (或网格) 选 m, tau, lambda; paq-naive: m = 1 且不截断, lambda 取 m = 1 时的策略值。
    给出 lam 时直接使用, 不再按 c1_scale 计算。
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    sigma = generate_metric_orthonormal(d, r, rng)

    if query_type == "paq":
        cfg = policy_config(sigma, noise, N, d, m)
        data = run_pipeline(sigma, cfg, rng)
        if lam is None:
            lam = choose_lambda(sigma, noise, cfg.n, cfg.m, d, cfg.tau, c1_scale)
        result = fit_paq(data, noise.y, _solver_config(lam))
        _log_theory(sigma, noise, data, N, d, lam, c1_scale, result.estimate)
        tau, m_used, hits = cfg.tau, cfg.m, data.truncation_hits
    elif query_type == "paq-naive":
        data = run_pipeline(sigma, PipelineConfig(N=N, m=1, tau=math.inf, noise=noise), rng)
        responses = [PaqResponse(a, g, eta) for a, g, eta in
                     zip(data.sensing_vectors, data.averaged_responses, data.noise_means)]
        if lam is None:
            lam = choose_lambda(sigma, noise, N, 1, d, choose_tau(sigma, noise, N, 1, d), c1_scale)
        result = fit_paq_naive(responses, noise.y, _solver_config(lam))
        tau, m_used, hits = math.inf, 1, 0
    else:
        raise ConfigError(f"未知 PAQ 查询类型: {query_type}")

    error = normalized_error(result.estimate, sigma)
    return TrialRecord(experiment, query_type, N, d, r, m_used, tau, lam, trial, seed,
                       error, time.perf_counter() - start, hits)


def calibrate_c1(cfg: ExperimentConfig, N: int, d: int, r: int, m: Optional[int],
                 grid: Sequence[float] = C1_CV_GRID) -> float:
    """在一次先导试验的数据上做 k 折交叉验证选 C1; 先导种子与正式试验的种子不同"""
    noise = cfg.noise
    seed = derive_trial_seed(cfg.master_seed, cfg.experiment, (N, d, r, m or 0, "pilot"))
    rng = np.random.default_rng(seed)
    sigma = generate_metric_orthonormal(d, r, rng)
    pipeline = policy_config(sigma, noise, N, d, m)
    data = run_pipeline(sigma, pipeline, rng)

    def lam_of(c1: float, n_train: int) -> float:
        return choose_lambda(sigma, noise, n_train, pipeline.m, d, pipeline.tau, c1)

    best, _ = cross_validate_c1(data, noise.y, lam_of, grid, SolverConfig(max_iters=C1_CV_MAX_ITERS))
    logger.info(f"N={N} d={d} r={r} m={pipeline.m}: 交叉验证 C1={best}")
    return best


def _run_tasks(tasks: List[Callable[[], TrialRecord]], threads: int) -> List[TrialRecord]:
    """线程数只影响速度; 结果最终按键排序"""
    def run(task):
        record = task()
        logger.info(f"试验完成: {record.query_type} N={record.N} d={record.d} r={record.r} "
                    f"m={record.m} trial={record.trial} 误差={record.normalized_error:.4f}")
        return record

    if threads <= 1:
        records = [run(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, tasks))
    return sorted(records, key=TrialRecord.sort_key)


def run_compare_queries(cfg: ExperimentConfig, threads: int = 1,
                        query_types: Sequence[str] = QUERY_TYPES) -> List[TrialRecord]:
    """成对 / 三元组 / 排序-k / PAQ 直接回归的样本效率对比 (全部无噪声)"""
    if cfg.eta_up > 0:
        raise ConfigError("查询对比实验要求无噪声 (eta_up = 0)")
    tasks = []
    for N, d, r, _ in grid_points(cfg):
        for trial in range(cfg.trials):
            seed = derive_trial_seed(cfg.master_seed, cfg.experiment, (N, d, r, trial))
            for query_type in query_types:
                tasks.append(lambda q=query_type, N=N, d=d, r=r, s=seed, t=trial:
                             compare_trial(q, N, d, r, cfg.y, cfg.lambda_scale, s, cfg.experiment, t))
    logger.info(f"开始查询对比实验: {len(tasks)} 个试验")
    return _run_tasks(tasks, threads)


def run_paq_sweep(cfg: ExperimentConfig, threads: int = 1,
                  query_types: Sequence[str] = ("paq",), cv: bool = False) -> List[TrialRecord]:
    """对 (N, d, r, m) 网格做全因子扫描; 同一坐标下不同 m 与查询类型共用种子

    cv 为真时每个网格点先用先导试验交叉验证 C1, 否则 C1 = cfg.lambda_scale。
    """
    if cfg.experiment not in ("sweep_d", "sweep_r", "sweep_m"):
        raise ConfigError(f"扫描实验不支持: {cfg.experiment}")
    noise = cfg.noise
    tasks = []
    for N, d, r, m in grid_points(cfg):
        c1 = calibrate_c1(cfg, N, d, r, m) if cv else cfg.lambda_scale
        for trial in range(cfg.trials):
            seed = derive_trial_seed(cfg.master_seed, cfg.experiment, (N, d, r, trial))
            for query_type in query_types:
                tasks.append(lambda q=query_type, N=N, d=d, r=r, m=m, c1=c1, s=seed, t=trial:
                             paq_trial(q, N, d, r, m, noise, c1, s, cfg.experiment, t))
    logger.info(f"开始 {cfg.experiment} 扫描: {len(tasks)} 个试验")
    return _run_tasks(tasks, threads)


def replay_trial(record: TrialRecord, y: float, eta_up: float, c1_scale: Optional[float] = None) -> TrialRecord:
    """按记录中的种子与参数重跑一次试验; 未给出 c1_scale 时沿用记录中的 lambda"""
    if record.experiment == "compare_queries":
        return compare_trial(record.query_type, record.N, record.d, record.r, y, record.lam,
                             record.seed, record.experiment, record.trial)
    noise = NoiseModel("uniform" if eta_up > 0 else "none", eta_up, y)
    m = record.m if record.experiment == "sweep_m" else None
    lam = record.lam if c1_scale is None else None
    return paq_trial(record.query_type, record.N, record.d, record.r, m, noise,
                     1.0 if c1_scale is None else c1_scale,
                     record.seed, record.experiment, record.trial, lam)


# ================= 聚合 =================
def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """两遍法: 均值与均值标准误, 单个样本的标准误为 0"""
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def x_axis(experiment: str) -> Tuple[str, Callable[[TrialRecord], float]]:
    if experiment == "sweep_d":
        return "N/d", lambda rec: rec.N / rec.d
    if experiment == "sweep_m":
        return "m", lambda rec: rec.m
    return "N", lambda rec: rec.N


def series_label(experiment: str, rec: TrialRecord) -> str:
    prefix = "" if rec.query_type == "paq" else f"{rec.query_type} "
    if experiment == "sweep_d":
        return f"{prefix}d={rec.d}"
    if experiment == "sweep_r":
        return f"{prefix}r={rec.r}"
    if experiment == "sweep_m":
        return f"{prefix}N={rec.N}, d={rec.d}"
    return rec.query_type


def aggregate(records: Iterable[TrialRecord]) -> Dict[str, List[Tuple[float, float, float, int]]]:
    """按系列聚合为 [(x, 均值, 标准误, 次数)], x 升序"""
    groups: Dict[str, Dict[float, List[float]]] = {}
    for rec in records:
        _, x_of = x_axis(rec.experiment)
        series = groups.setdefault(series_label(rec.experiment, rec), {})
        series.setdefault(float(x_of(rec)), []).append(rec.normalized_error)
    result = {}
    for label in sorted(groups):
        points = []
        for x in sorted(groups[label]):
            mean, se = mean_and_se(groups[label][x])
            points.append((x, mean, se, len(groups[label][x])))
        result[label] = points
    return result


# ================= 输出 =================
def _format(value) -> str:
    if isinstance(value, float):
        return format(value, f".{CSV_FLOAT_DIGITS}g")
    return str(value)


def emit_table(rows: List[Dict[str, Any]], header: Sequence[str], path: str) -> str:
    if not rows:
        raise IoError(f"没有可写入的记录: {path}")
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format(row[key]) for key in header])
    except OSError as e:
        raise IoError(f"写入 {path} 失败: {e}")
    return path


def emit_csv(records: Sequence[TrialRecord], path: str, timings: bool = False) -> str:
    """按键排序写出试验记录; timings=False 时 wall_time_s 写 0, 保证重放字节一致"""
    rows = []
    for rec in sorted(records, key=TrialRecord.sort_key):
        row = rec.row()
        if not timings:
            row["wall_time_s"] = 0.0
        rows.append(row)
    emit_table(rows, CSV_HEADER, path)
    logger.info(f"CSV 已写入 {path} ({len(rows)} 行)")
    return path


def emit_plot(records: Sequence[TrialRecord], path: str) -> str:
    """均值曲线 + 均值标准误阴影带, 每个系列一条曲线"""
    if not records:
        raise IoError(f"没有可绘制的记录: {path}")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    experiment = records[0].experiment
    x_label, _ = x_axis(experiment)
    series = aggregate(records)

    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for label, points in series.items():
            xs = np.array([p[0] for p in points])
            mean = np.array([p[1] for p in points])
            se = np.array([p[2] for p in points])
            line, = ax.plot(xs, mean, marker='o', label=label)
            if len(points) > 1:
                ax.fill_between(xs, mean - se, mean + se, color=line.get_color(), alpha=0.25, linewidth=0)
        ax.set_xlabel(x_label)
        ax.set_ylabel("normalized error")
        ax.set_title(experiment)
        ax.legend(loc='upper right')
        fig.tight_layout()
        try:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            fig.savefig(path, format='svg', metadata={'Date': None})
        except OSError as e:
            raise IoError(f"写入 {path} 失败: {e}")
        finally:
            plt.close(fig)
    logger.info(f"SVG 已写入 {path} ({len(series)} 个系列)")
    return path


# ================= 诊断与尺度检验 =================
DIAGNOSTIC_HEADER = ["check", "estimate", "standard_error", "target", "z_score", "n_samples", "passed"]


def run_diagnostics(cfg: ExperimentConfig, samples: int = MC_SAMPLES) -> List[Dict[str, Any]]:
    """偏差闭式、逆卡方矩、截断审计与一般秩上界的 Monte Carlo 检验"""
    def rng_for(name: str):
        return np.random.default_rng(derive_trial_seed(cfg.master_seed, "diagnostics", (name,)))

    rows = []

    def add(name: str, report, passed: bool):
        diag = lambda v: float(np.mean(np.diag(v))) if isinstance(v, np.ndarray) and v.ndim == 2 else v
        rows.append({"check": name, "estimate": diag(report.estimate),
                     "standard_error": float(np.max(report.standard_error)),
                     "target": diag(report.target) if report.target is not None else float("nan"),
                     "z_score": report.z_score, "n_samples": report.n_samples, "passed": passed})

    sigma = isotropic_metric(10)
    noisy = NoiseModel("uniform", cfg.eta_up, cfg.y)
    report = bias_monte_carlo(sigma, noisy, samples, rng_for("bias"))
    add("bias_isotropic", report, report.z_score <= 4.0)
    report = bias_monte_carlo(sigma, NoiseModel("none", 0.0, cfg.y), samples, rng_for("bias_zero"))
    add("bias_zero_noise", report, report.z_score <= 3.0)

    for d, p in ((10, 1), (10, 4)):
        report = inverse_moment_check(d, p, samples, rng_for(f"moment_{d}_{p}"))
        add(f"inverse_moment_d{d}_p{p}", report, report.z_score <= MC_Z_LIMIT)
    try:
        inverse_moment_check(9, 4, samples, rng_for("moment_9_4"))
        rows.append({"check": "inverse_moment_d9_p4_rejected", "estimate": float("nan"), "standard_error": float("nan"),
                     "target": float("nan"), "z_score": float("nan"), "n_samples": 0, "passed": False})
    except InvalidDim:
        rows.append({"check": "inverse_moment_d9_p4_rejected", "estimate": float("nan"), "standard_error": float("nan"),
                     "target": float("nan"), "z_score": float("nan"), "n_samples": 0, "passed": True})

    low_rank = generate_metric_orthonormal(50, 15, rng_for("bound_metric"))
    report = inverse_moment_bound(low_rank, 1, samples // 10, rng_for("bound"))
    add("inverse_moment_upper_bound_r15", report, report.estimate <= report.target + 4.0 * report.standard_error)

    # 重尾截断: N=20000, d=50, r=9, y=eta_up=200
    trunc_noise = NoiseModel("uniform", 200.0, 200.0)
    trunc_sigma = generate_metric_orthonormal(50, 9, rng_for("truncation_metric"))
    pcfg = policy_config(trunc_sigma, trunc_noise, 20000, 50)
    audit = truncation_audit(run_pipeline(trunc_sigma, pcfg, rng_for("truncation")))
    rows.append({"check": "truncation_hit_rate", "estimate": audit.hit_rate, "standard_error": float("nan"),
                 "target": float("nan"), "z_score": float("nan"), "n_samples": audit.n,
                 "passed": audit.hit_rate < 0.5})
    for row in rows:
        logger.info(f"诊断 {row['check']}: 估计 {row['estimate']}, z={row['z_score']}, 通过={row['passed']}")
    return rows


SCALE_HEADER = ["c", "d", "r", "N", "deviation", "passed"]


def run_scale_check(cfg: ExperimentConfig, factors: Sequence[float] = SCALE_CHECK_FACTORS) -> List[Dict[str, Any]]:
    N, d, r, _ = grid_points(cfg)[0]
    scenario = ScaleScenario(d=d, r=r, N=N, y=cfg.y, eta_up=cfg.eta_up,
                             seed=derive_trial_seed(cfg.master_seed, "scale_check", (N, d, r)) >> 1,
                             c1_scale=cfg.lambda_scale)
    rows = []
    for c in factors:
        deviation = scale_equivariance_check(scenario, c)
        rows.append({"c": float(c), "d": d, "r": r, "N": N, "deviation": deviation,
                     "passed": deviation <= SCALE_CHECK_LIMIT})
    return rows


def require_passed(rows: List[Dict[str, Any]], name: str):
    failed = [i for i, row in enumerate(rows) if not row["passed"]]
    if failed:
        raise PropertyViolated(name, failed[0], f"({len(failed)} 项未通过)")
