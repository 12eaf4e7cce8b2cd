"""
凸估计器:
- PAQ 核范数正则最小二乘 (截断流水线 / 朴素逆测量 / 无噪声直接回归), 加速近端梯度求解
- 成对、三元组、排序查询的核范数正则 hinge 损失基线, 投影次梯度求解
"""

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import (
    SOLVER_MAX_ITERS, SOLVER_PATIENCE, SOLVER_POWER_ITERS, SOLVER_MIN_STEP, SOLVER_STEP_GROWTH,
    SOLVER_MAX_STEP_RATIO, SOLVER_EXACT_MAX_PARAMS, HINGE_MAX_ITERS, HINGE_STEP_SCALE, C1_CV_FOLDS, C1_CV_GRID,
)
from errors import NoProgress, ZeroResponse, ZeroMatrix, DimMismatch
from linalg_core import as_metric, is_psd, symmetrize, prox_trace_psd, project_psd
from logger import PaqLogger
from models import MetricMatrix, OrdinalOutcome, PaqResponse, PipelineOutput, SolverConfig, SolveResult
from oracles import decompose_ranking

logger = PaqLogger()


# ================= PAQ 最小二乘 =================
class RankOneRegression:
    """(1/n) sum_i (t_i - g_i a_i^T Sigma a_i)^2, 感知矩阵 g_i a_i a_i^T 不显式构造"""

    def __init__(self, vectors: np.ndarray, weights: np.ndarray, targets):
        self.A = np.asarray(vectors, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] < 1:
            raise DimMismatch(f"感知向量需为非空 (n, d) 数组, 实际 {self.A.shape}")
        self.n, self.d = self.A.shape
        self.g = np.asarray(weights, dtype=float)
        self.t = np.broadcast_to(np.asarray(targets, dtype=float), (self.n,))

    def forms(self, sigma: np.ndarray) -> np.ndarray:
        return np.einsum('ij,ij->i', self.A @ sigma, self.A)

    def residual(self, sigma: np.ndarray) -> np.ndarray:
        return self.g * self.forms(sigma) - self.t

    def value(self, sigma: np.ndarray) -> float:
        res = self.residual(sigma)
        return float(res @ res) / self.n

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        """sum_i w_i a_i a_i^T, 秩一累加"""
        return symmetrize((self.A * w[:, None]).T @ self.A)

    def value_and_grad(self, sigma: np.ndarray) -> Tuple[float, np.ndarray]:
        res = self.residual(sigma)
        return float(res @ res) / self.n, self.adjoint((2.0 / self.n) * self.g * res)

    def lipschitz(self, iters: int = SOLVER_POWER_ITERS) -> float:
        """对 X -> (2/n) sum g_i^2 <a_i a_i^T, X> a_i a_i^T 做幂迭代; 初始点固定为 I/sqrt(d)"""
        X = np.eye(self.d) / math.sqrt(self.d)
        L = 0.0
        for _ in range(iters):
            H = self.adjoint((2.0 / self.n) * self.g ** 2 * self.forms(X))
            L = float(np.linalg.norm(H, 'fro'))
            if L == 0.0:
                break
            X = H / L
        return L

    def identity_scale(self) -> float:
        """tr(Sigma_0) = d * mean(t) / mean(g |a|^2)"""
        denom = float(np.mean(self.g * np.einsum('ij,ij->i', self.A, self.A)))
        return float(np.mean(self.t)) / denom if denom > 0 else 0.0


def _initial_point(problem: RankOneRegression, cfg: SolverConfig) -> np.ndarray:
    if cfg.init_matrix is not None:
        return project_psd(cfg.init_matrix)
    if cfg.init == "scaled_identity":
        return problem.identity_scale() * np.eye(problem.d)
    return np.zeros((problem.d, problem.d))


def _prox_step(problem: RankOneRegression, Y: np.ndarray, f_y: float, grad_y: np.ndarray,
               t: float, lam: float, shrink: float) -> Tuple[np.ndarray, float, float]:
    """从 Y 出发的回溯近端梯度步, 返回 (X_new, smooth(X_new), t)"""
    floor = 10 * np.finfo(float).eps * np.linalg.norm(Y, 'fro')
    while True:
        X_new = prox_trace_psd(Y - t * grad_y, t * lam)
        D = X_new - Y
        f_new = problem.value(X_new)
        bound = f_y + float(np.sum(grad_y * D)) + float(np.sum(D * D)) / (2.0 * t)
        if f_new <= bound + 1e-12 * abs(f_y):
            return X_new, f_new, t
        # 迭代点相对 Y 只差舍入误差
        if np.linalg.norm(D, 'fro') <= floor:
            return X_new, f_new, t
        t *= shrink
        if t < SOLVER_MIN_STEP:
            raise NoProgress(f"回溯线搜索步长下溢 (t={t:.3e})")


def _least_squares_point(problem: RankOneRegression) -> Optional[np.ndarray]:
    """lambda = 0 时无约束最小二乘的正规方程解, 按上三角参数化; 参数过多时返回 None"""
    d = problem.d
    rows, cols = np.triu_indices(d)
    if len(rows) > SOLVER_EXACT_MAX_PARAMS:
        return None
    features = problem.g[:, None] * problem.A[:, rows] * problem.A[:, cols] * np.where(rows == cols, 1.0, 2.0)
    coef, *_ = np.linalg.lstsq(features, problem.t, rcond=None)
    X = np.zeros((d, d))
    X[rows, cols] = coef
    X[cols, rows] = coef
    return X


def solve_trace_regression(problem: RankOneRegression, cfg: SolverConfig) -> SolveResult:
    """min_{Sigma >= 0} problem(Sigma) + lambda tr(Sigma)

    FISTA + 回溯线搜索; 每次接受后尝试放大步长, 目标上升时重置动量并改走一步普通近端梯度,
    保证目标单调不增。lambda = 0 且维度不大时先解正规方程: 解为 PSD 则直接返回, 否则投影后作为初始点。
    """
    lam = cfg.lam
    max_iters = cfg.max_iters or SOLVER_MAX_ITERS
    L = problem.lipschitz()
    t = 1.0 / L if L > 0 else 1.0
    t_max = SOLVER_MAX_STEP_RATIO * t

    X = _initial_point(problem, cfg)
    if lam == 0.0 and cfg.init_matrix is None:
        exact = _least_squares_point(problem)
        if exact is not None:
            X = project_psd(exact)
            if is_psd(exact):
                F_x = problem.value(X)
                _, grad = problem.value_and_grad(X)
                residual = float(np.linalg.norm(X - project_psd(X - t * grad), 'fro'))
                logger.debug(f"正规方程解为 PSD, 目标值 {F_x:.6e}, 不动点残差 {residual:.3e}")
                return SolveResult(as_metric(X), [F_x], 0, True, residual)

    F_x = problem.value(X) + lam * float(np.trace(X))
    trace = [F_x]
    X_prev = X
    theta = 1.0
    quiet = 0
    converged = False
    iterations = 0

    for k in range(1, max_iters + 1):
        iterations = k
        theta_next = (1.0 + math.sqrt(1.0 + 4.0 * theta ** 2)) / 2.0
        Y = X + ((theta - 1.0) / theta_next) * (X - X_prev)
        f_y, grad_y = problem.value_and_grad(Y)
        X_new, f_new, t = _prox_step(problem, Y, f_y, grad_y, min(t * SOLVER_STEP_GROWTH, t_max), lam,
                                     cfg.backtrack_shrink)
        F_new = f_new + lam * float(np.trace(X_new))

        if F_new > F_x:
            # 动量重启
            theta_next = 1.0
            f_x, grad_x = problem.value_and_grad(X)
            X_new, f_new, t = _prox_step(problem, X, f_x, grad_x, t, lam, cfg.backtrack_shrink)
            F_new = f_new + lam * float(np.trace(X_new))
            if F_new > F_x:
                X_new, F_new = X, F_x

        change = abs(F_x - F_new)
        X_prev, X, F_x, theta = X, X_new, F_new, theta_next
        trace.append(F_x)

        if change <= cfg.rel_tol * max(abs(F_x), np.finfo(float).tiny):
            quiet += 1
            if quiet >= SOLVER_PATIENCE:
                converged = True
                break
        else:
            quiet = 0

    _, grad = problem.value_and_grad(X)
    residual = float(np.linalg.norm(X - prox_trace_psd(X - t * grad, t * lam), 'fro'))
    if not converged:
        logger.warning(f"近端梯度未在 {max_iters} 步内收敛, 目标值 {F_x:.6e}")
    logger.debug(f"求解完成: {iterations} 步, 目标值 {F_x:.6e}, 不动点残差 {residual:.3e}")
    return SolveResult(as_metric(X), trace, iterations, converged, residual)


def _stack_responses(responses: Sequence[PaqResponse]) -> Tuple[np.ndarray, np.ndarray]:
    if not responses:
        raise DimMismatch("至少需要一个 PAQ 响应")
    A = np.vstack([resp.query_vector for resp in responses])
    gamma_sq = np.array([resp.gamma_sq for resp in responses], dtype=float)
    return A, gamma_sq


def fit_paq(data: PipelineOutput, y: float, cfg: SolverConfig) -> SolveResult:
    """截断平均响应 gamma_tilde^2 构成感知矩阵 gamma_tilde^2 a a^T"""
    problem = RankOneRegression(data.sensing_vectors, data.truncated_responses, y)
    return solve_trace_regression(problem, cfg)


def fit_paq_naive(responses: Sequence[PaqResponse], y: float, cfg: SolverConfig) -> SolveResult:
    """直接用逆测量 A_inv = gamma^2 a a^T, 不平均不截断; 噪声下存在不随 N 消失的偏差"""
    A, gamma_sq = _stack_responses(responses)
    return solve_trace_regression(RankOneRegression(A, gamma_sq, y), cfg)


def fit_paq_direct(responses: Sequence[PaqResponse], y: float, cfg: SolverConfig) -> SolveResult:
    """无噪声模式: 目标 y / gamma_i^2, 感知矩阵 a_i a_i^T"""
    A, gamma_sq = _stack_responses(responses)
    zero = np.flatnonzero(gamma_sq <= 0)
    if zero.size:
        raise ZeroResponse(f"第 {int(zero[0])} 个响应 gamma^2 = 0, 无法取倒数")
    return solve_trace_regression(RankOneRegression(A, np.ones(len(gamma_sq)), y / gamma_sq), cfg)


def oracle_lambda(data: PipelineOutput, sigma: MetricMatrix, y: float) -> float:
    """2 |(1/n) sum_i (y - <A_i, Sigma*>) A_i|_op, 仿真中可精确计算的正则化下界"""
    problem = RankOneRegression(data.sensing_vectors, data.truncated_responses, y)
    w = -problem.residual(sigma.matrix) * problem.g / problem.n
    return 2.0 * float(np.max(np.abs(np.linalg.eigvalsh(problem.adjoint(w)))))


def cross_validate_c1(data: PipelineOutput, y: float, lam_of: Callable[[float, int], float],
                      grid: Optional[Sequence[float]], cfg: SolverConfig,
                      folds: int = C1_CV_FOLDS) -> Tuple[float, Dict[float, float]]:
    """k 折交叉验证 C1: 在留出折上比较 (y - <A_i, Sigma_hat>)^2 的均值

    lam_of(c1, n_train) 给出训练集大小下的 lambda。折按下标连续切分。
    """
    grid = C1_CV_GRID if grid is None else grid
    n = data.n
    folds = max(2, min(folds, n))
    bounds = np.linspace(0, n, folds + 1).astype(int)
    A, g = data.sensing_vectors, data.truncated_responses
    scores = {}
    for c1 in grid:
        losses = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            train = np.r_[0:lo, hi:n]
            problem = RankOneRegression(A[train], g[train], y)
            fold_cfg = SolverConfig(lam_of(c1, len(train)), cfg.max_iters, cfg.rel_tol,
                                    cfg.backtrack_shrink, cfg.init)
            est = solve_trace_regression(problem, fold_cfg).estimate.matrix
            held = RankOneRegression(A[lo:hi], g[lo:hi], y)
            losses.append(held.value(est))
        scores[c1] = float(np.mean(losses))
        logger.debug(f"交叉验证 C1={c1}: 留出误差 {scores[c1]:.6e}")
    best = min(scores, key=lambda c: (scores[c], c))
    logger.info(f"交叉验证选出 C1={best}")
    return best, scores


# ================= 序数查询 hinge 基线 =================
class HingeProblem:
    """(1/T) sum_t max(0, offset - eps_t (q[pos_t] - q[neg_t])) + lambda tr(Sigma)

    q 为差向量表 V 每行的二次型; neg 为 None 时该项只有 q[pos]。
    差向量去重后共享, 排序查询拆出的三元组只需算 k 个二次型。
    """

    def __init__(self, V: np.ndarray, pos: np.ndarray, neg: Optional[np.ndarray],
                 labels: np.ndarray, offset: float, lam: float):
        self.V = V
        self.pos = pos
        self.neg = neg
        self.labels = labels.astype(float)
        self.offset = float(offset)
        self.lam = lam
        self.T = len(labels)

    def value_and_subgrad(self, sigma: np.ndarray) -> Tuple[float, np.ndarray]:
        q = np.einsum('ij,ij->i', self.V @ sigma, self.V)
        diff = q[self.pos] - (q[self.neg] if self.neg is not None else 0.0)
        hinge = self.offset - self.labels * diff
        active = hinge > 0
        value = float(np.sum(hinge[active])) / self.T + self.lam * float(np.trace(sigma))

        M = self.V.shape[0]
        coef = np.bincount(self.pos[active], weights=-self.labels[active], minlength=M)
        if self.neg is not None:
            coef += np.bincount(self.neg[active], weights=self.labels[active], minlength=M)
        G = symmetrize((self.V * (coef / self.T)[:, None]).T @ self.V) + self.lam * np.eye(sigma.shape[0])
        return value, G


def solve_hinge(problem: HingeProblem, d: int, max_iters: int = HINGE_MAX_ITERS,
                step_scale: float = HINGE_STEP_SCALE) -> SolveResult:
    """投影次梯度, 步长 c/sqrt(k) 沿归一化次梯度; 输出最优迭代点"""
    X = np.zeros((d, d))
    best_X, best_F = X, math.inf
    trace = []
    converged = False
    iterations = 0
    for k in range(1, max_iters + 1):
        iterations = k
        F, G = problem.value_and_subgrad(X)
        if F < best_F:
            best_X, best_F = X, F
        trace.append(best_F)
        norm = float(np.linalg.norm(G, 'fro'))
        if norm == 0.0:
            converged = True
            break
        X = project_psd(X - (step_scale / math.sqrt(k)) * G / norm)
    logger.debug(f"hinge 次梯度完成: {iterations} 步, 最优目标 {best_F:.6e}")
    return SolveResult(as_metric(best_X), trace, iterations, converged)


def _as_tuple(outcome, size: int):
    if isinstance(outcome, OrdinalOutcome):
        return (*outcome.items, outcome.label)
    if len(outcome) != size + 1:
        raise DimMismatch(f"需要 {size} 个物品加一个标签, 实际 {len(outcome)} 项")
    return tuple(outcome)


def fit_pairwise(outcomes: Sequence, y: float, cfg: SolverConfig, **kwargs) -> SolveResult:
    """(1/N) sum max(0, y - eps |x1 - x2|^2_Sigma) + lambda |Sigma|_*"""
    rows = [_as_tuple(o, 2) for o in outcomes]
    V = np.vstack([np.asarray(x1, float) - np.asarray(x2, float) for x1, x2, _ in rows])
    labels = np.array([eps for *_, eps in rows])
    problem = HingeProblem(V, np.arange(len(rows)), None, labels, y, cfg.lam)
    kwargs.setdefault("max_iters", cfg.max_iters or HINGE_MAX_ITERS)
    return solve_hinge(problem, V.shape[1], **kwargs)


def fit_triplet(outcomes: Sequence, cfg: SolverConfig, **kwargs) -> SolveResult:
    """(1/N) sum max(0, 1 - eps (|x1 - x2|^2_Sigma - |x1 - x3|^2_Sigma)) + lambda |Sigma|_*"""
    rows = [_as_tuple(o, 3) for o in outcomes]
    T = len(rows)
    diffs = np.vstack(
        [np.asarray(x1, float) - np.asarray(x2, float) for x1, x2, _, _ in rows]
        + [np.asarray(x1, float) - np.asarray(x3, float) for x1, _, x3, _ in rows]
    )
    V, inverse = np.unique(diffs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    labels = np.array([eps for *_, eps in rows])
    problem = HingeProblem(V, inverse[:T], inverse[T:], labels, 1.0, cfg.lam)
    kwargs.setdefault("max_iters", cfg.max_iters or HINGE_MAX_ITERS)
    return solve_hinge(problem, V.shape[1], **kwargs)


def ranking_triplets(queries: Sequence[Tuple[np.ndarray, Sequence[np.ndarray], Sequence[int]]]) -> List[OrdinalOutcome]:
    triplets = []
    for x0, items, perm in queries:
        if len(items) < 2:
            raise ValueError(f"排序查询至少需要 2 个物品, 实际 {len(items)}")
        triplets.extend(decompose_ranking(perm, items, x0))
    return triplets


def fit_ranking(queries: Sequence[Tuple[np.ndarray, Sequence[np.ndarray], Sequence[int]]],
                cfg: SolverConfig, **kwargs) -> SolveResult:
    """每个排序拆成 k(k-1)/2 个三元组后交给 fit_triplet"""
    return fit_triplet(ranking_triplets(queries), cfg, **kwargs)


def normalize_unit_fro(est: Union[MetricMatrix, np.ndarray]) -> MetricMatrix:
    """缩放到单位 Frobenius 范数"""
    M = est.matrix if isinstance(est, MetricMatrix) else np.asarray(est, dtype=float)
    norm = float(np.linalg.norm(M, 'fro'))
    if norm == 0.0:
        raise ZeroMatrix("零矩阵无法归一化")
    return as_metric(M / norm)
