"""领域数据结构: 度量矩阵、噪声模型、PAQ 响应、流水线输出、求解结果与实验记录"""

from dataclasses import dataclass, asdict
from typing import List, Dict, Any, Optional, NamedTuple, Tuple

import numpy as np

from config import CSV_HEADER, SOLVER_REL_TOL, SOLVER_BACKTRACK_SHRINK
from errors import ConfigError

# 对称矩阵直接用 numpy 数组表示, 由 linalg_core.symmetrize 保证对称
SymMatrix = np.ndarray


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray      # 降序
    eigenvectors: np.ndarray     # 列正交


@dataclass
class MetricMatrix:
    """PSD 度量矩阵及其谱信息 (真值 Sigma* 或估计 Sigma_hat)"""
    matrix: SymMatrix
    rank: int
    singular_values: np.ndarray  # 降序的非零奇异值 sigma_1 >= ... >= sigma_r > 0
    trace: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def sigma_1(self) -> float:
        return float(self.singular_values[0]) if self.rank else 0.0

    @property
    def sigma_r(self) -> float:
        return float(self.singular_values[-1]) if self.rank else 0.0

    @property
    def fro_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 'fro'))


@dataclass(frozen=True)
class NoiseModel:
    """有界零均值噪声; 派生量 nu^2, b_up, mu_b 由 (kind, eta_up, y) 计算"""
    kind: str = "none"           # none | uniform
    eta_up: float = 0.0
    y: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "uniform"):
            raise ConfigError(f"未知噪声类型: {self.kind}")
        if not self.y > 0:
            raise ConfigError(f"边界值 y 必须为正: {self.y}")
        if self.eta_up < 0:
            raise ConfigError(f"eta_up 不能为负: {self.eta_up}")
        if self.kind == "uniform" and self.eta_up > self.y:
            raise ConfigError(f"均匀噪声要求 eta_up <= y, 实际 {self.eta_up} > {self.y}")

    @property
    def effective_eta_up(self) -> float:
        return self.eta_up if self.kind == "uniform" else 0.0

    @property
    def variance(self) -> float:
        return self.effective_eta_up ** 2 / 3.0

    @property
    def b_up(self) -> float:
        return self.y + self.effective_eta_up

    @property
    def mu_b(self) -> float:
        # 对称噪声, 中位数为 0
        return self.y

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "none":
            return np.zeros(size) if size is not None else 0.0
        return rng.uniform(-self.eta_up, self.eta_up, size=size)

    def scaled(self, c: float) -> "NoiseModel":
        return NoiseModel(self.kind, c * self.eta_up, c * self.y)


@dataclass
class PaqResponse:
    query_vector: np.ndarray
    gamma_sq: float
    noise: float


@dataclass
class OrdinalOutcome:
    label: int                   # -1 或 +1
    items: Tuple[np.ndarray, ...]


@dataclass
class PipelineConfig:
    N: int
    m: int
    tau: float
    noise: NoiseModel

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"平均参数 m 必须 >= 1: {self.m}")
        if not self.tau > 0:
            raise ConfigError(f"截断阈值 tau 必须为正: {self.tau}")

    @property
    def n(self) -> int:
        return self.N // self.m

    @property
    def discarded(self) -> int:
        return self.N - self.n * self.m


@dataclass
class PipelineOutput:
    sensing_vectors: np.ndarray       # (n, d)
    truncated_responses: np.ndarray   # gamma_tilde^2
    averaged_responses: np.ndarray    # gamma_bar^2
    truncation_hits: int
    noise_means: np.ndarray           # 每个向量 m 次噪声的均值 eta_bar
    tau: float
    m: int
    discarded: int = 0

    @property
    def n(self) -> int:
        return self.sensing_vectors.shape[0]

    @property
    def d(self) -> int:
        return self.sensing_vectors.shape[1]


@dataclass
class RegimeReport:
    regime: str                  # high_noise | low_noise
    noise_ratio: float           # nu^2 / b_up^2
    threshold: float             # sqrt(d / N)
    m: int
    tau: float
    lam: float
    sample_size_ok: bool = True
    predicted_rate: float = float("nan")


@dataclass
class SolverConfig:
    lam: float = 0.0
    max_iters: Optional[int] = None   # None: PAQ 用 SOLVER_MAX_ITERS, hinge 用 HINGE_MAX_ITERS
    rel_tol: float = SOLVER_REL_TOL
    backtrack_shrink: float = SOLVER_BACKTRACK_SHRINK
    init: str = "zero"           # zero | scaled_identity
    init_matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda 不能为负: {self.lam}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigError(f"max_iters 必须 >= 1: {self.max_iters}")
        if not self.rel_tol > 0:
            raise ConfigError(f"rel_tol 必须为正: {self.rel_tol}")
        if not 0 < self.backtrack_shrink < 1:
            raise ConfigError(f"backtrack_shrink 必须在 (0,1) 内: {self.backtrack_shrink}")
        if self.init not in ("zero", "scaled_identity"):
            raise ConfigError(f"未知初始化方式: {self.init}")


@dataclass
class SolveResult:
    estimate: MetricMatrix
    objective_trace: List[float]
    iterations: int
    converged: bool
    residual: float = float("nan")    # 近端梯度不动点残差 (PAQ 求解器)


@dataclass
class MonteCarloReport:
    estimate: Any
    standard_error: Any
    n_samples: int
    target: Any
    provenance: str
    z_score: float


@dataclass
class TruncationAudit:
    n: int
    hits: int
    hit_rate: float


@dataclass
class ExperimentConfig:
    experiment: str
    grid: Dict[str, List[float]]
    y: float
    eta_up: float
    trials: int
    master_seed: int
    lambda_scale: float
    output_dir: str

    EXPERIMENTS = ("compare_queries", "sweep_d", "sweep_r", "sweep_m", "diagnostics", "scale_check")
    GRID_KEYS = ("N", "N_over_d", "d", "r", "m")

    def __post_init__(self):
        if self.experiment not in self.EXPERIMENTS:
            raise ConfigError(f"未知实验类型: {self.experiment}")
        if self.trials < 1:
            raise ConfigError(f"trials 必须 >= 1: {self.trials}")
        if not self.y > 0:
            raise ConfigError(f"y 必须为正: {self.y}")
        if self.eta_up < 0 or self.eta_up > self.y:
            raise ConfigError(f"均匀噪声要求 0 <= eta_up <= y: {self.eta_up}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError(f"master_seed 必须是 64 位无符号整数: {self.master_seed}")
        for key, values in self.grid.items():
            if key not in self.GRID_KEYS:
                raise ConfigError(f"未知网格键: {key}")
            if not isinstance(values, list):
                raise ConfigError(f"网格 {key} 必须是列表")
            if any(not isinstance(v, (int, float)) or isinstance(v, bool) or v < 1 for v in values):
                raise ConfigError(f"网格 {key} 的取值必须 >= 1: {values}")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel("uniform" if self.eta_up > 0 else "none", self.eta_up, self.y)


@dataclass
class TrialRecord:
    experiment: str
    query_type: str
    N: int
    d: int
    r: int
    m: int
    tau: float
    lam: float
    trial: int
    seed: int
    normalized_error: float
    wall_time: float
    truncation_hits: int

    def sort_key(self):
        return (self.experiment, self.query_type, self.N, self.d, self.r, self.m, self.trial, self.seed)

    def row(self) -> Dict[str, Any]:
        values = asdict(self)
        values["lambda"] = values.pop("lam")
        values["wall_time_s"] = values.pop("wall_time")
        return {key: values[key] for key in CSV_HEADER}

