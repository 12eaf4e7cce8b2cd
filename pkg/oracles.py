"""
模拟应答者: PAQ 滑块响应、序数查询 (成对/三元组/排序) 与感知矩阵构造
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import TOL_DEGENERATE_REL
from errors import ConfigError, DegenerateDirection, DimMismatch
from linalg_core import mahalanobis_sq
from models import MetricMatrix, NoiseModel, OrdinalOutcome, PaqResponse, SymMatrix


def _sign(value: float) -> int:
    # sign(0) 记为 +1, 保证序数应答确定
    return 1 if value >= 0 else -1


def sample_query_vector(d: int, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    """a ~ N(0, I_d); 给出 n 时一次抽取 (n, d) 个"""
    return rng.standard_normal(d if n is None else (n, d))


def quadratic_form(sigma: MetricMatrix, a: np.ndarray) -> float:
    """a^T Sigma a, 方向退化时抛出 DegenerateDirection"""
    a = np.asarray(a, dtype=float)
    if a.shape != (sigma.dim,):
        raise DimMismatch(f"查询向量维度 {a.shape} 与度量矩阵维度 {sigma.dim} 不一致")
    quad = float(a @ sigma.matrix @ a)
    if quad <= TOL_DEGENERATE_REL * sigma.sigma_1 * float(a @ a):
        raise DegenerateDirection(f"a^T Sigma a = {quad:.3e}, 滑块无法到达边界")
    return quad


def paq_respond(sigma: MetricMatrix, a: np.ndarray, noise: NoiseModel,
                rng: Optional[np.random.Generator] = None, eta: Optional[float] = None) -> PaqResponse:
    """gamma^2 = (y + eta) / (a^T Sigma* a), eta 从噪声模型中抽取一次 (也可显式给出)"""
    quad = quadratic_form(sigma, a)
    if eta is None:
        if noise.kind != "none" and rng is None:
            raise ConfigError(f"{noise.kind} 噪声需要随机数生成器或显式给出的 eta")
        eta = float(noise.sample(rng)) if noise.kind != "none" else 0.0
    gamma_sq = max((noise.y + eta) / quad, 0.0)
    return PaqResponse(np.asarray(a, dtype=float), gamma_sq, float(eta))


def paq_respond_at(sigma: MetricMatrix, x: np.ndarray, a: np.ndarray, noise: NoiseModel,
                   rng: Optional[np.random.Generator] = None) -> Tuple[PaqResponse, np.ndarray]:
    """带参考物品 x 的 PAQ: 返回响应与滑块停止处的目标物品 x + gamma a

    响应与 x 无关, 目标物品到 x 的马氏距离平方恒为 y + eta。
    """
    response = paq_respond(sigma, a, noise, rng)
    target = np.asarray(x, dtype=float) + np.sqrt(response.gamma_sq) * response.query_vector
    return response, target


def build_inverted_sensing(resp: PaqResponse) -> SymMatrix:
    """A_inv = gamma^2 a a^T"""
    a = resp.query_vector
    return resp.gamma_sq * np.outer(a, a)


def pairwise_oracle(sigma: MetricMatrix, x1, x2, y: float) -> OrdinalOutcome:
    """epsilon = sign(|x1 - x2|^2_Sigma - y), 无噪声"""
    label = _sign(mahalanobis_sq(x1, x2, sigma) - y)
    return OrdinalOutcome(label, (np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)))


def triplet_oracle(sigma: MetricMatrix, x1, x2, x3) -> OrdinalOutcome:
    """epsilon = sign(|x1 - x2|^2_Sigma - |x1 - x3|^2_Sigma)"""
    label = _sign(mahalanobis_sq(x1, x2, sigma) - mahalanobis_sq(x1, x3, sigma))
    items = tuple(np.asarray(x, dtype=float) for x in (x1, x2, x3))
    return OrdinalOutcome(label, items)


def ranking_oracle(sigma: MetricMatrix, x0, items: Sequence[np.ndarray]) -> np.ndarray:
    """按到参考物品 x0 的马氏距离平方升序排序, 相等时保持原顺序"""
    if len(items) < 2:
        raise ValueError(f"排序查询至少需要 2 个物品, 实际 {len(items)}")
    distances = np.array([mahalanobis_sq(x0, item, sigma) for item in items])
    return np.argsort(distances, kind="stable")


def decompose_ranking(perm: Sequence[int], items: Sequence[np.ndarray], x0) -> List[OrdinalOutcome]:
    """把 k 个物品的排序拆成 k(k-1)/2 个三元组

    对排序中靠前的 p 与靠后的 q, 记为 (x0, q, p) 且 epsilon = +1:
    |x0 - q|^2 - |x0 - p|^2 >= 0, 与 triplet_oracle 的平局规则一致。
    """
    x0 = np.asarray(x0, dtype=float)
    ordered = [np.asarray(items[i], dtype=float) for i in perm]
    outcomes = []
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            outcomes.append(OrdinalOutcome(1, (x0, ordered[j], ordered[i])))
    return outcomes
