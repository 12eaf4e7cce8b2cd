"""
稠密对称矩阵基础运算: 特征分解、PSD 投影、迹范数近端映射、度量矩阵生成与误差度量
"""

import numpy as np

from config import TOL_PSD_REL, TOL_RANK_REL
from errors import NonFinite, InvalidRank, DimMismatch
from models import MetricMatrix, Spectrum, SymMatrix


def symmetrize(A) -> SymMatrix:
    """(A + A^T) / 2, 同时检查有限性"""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimMismatch(f"需要非空方阵, 实际形状 {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("矩阵包含 NaN/Inf")
    return (A + A.T) / 2.0


def sym_eigendecompose(A) -> Spectrum:
    """完整谱分解, 特征值降序"""
    A = symmetrize(A)
    eigenvalues, eigenvectors = np.linalg.eigh(A)
    order = np.argsort(eigenvalues)[::-1]
    return Spectrum(eigenvalues[order], eigenvectors[:, order])


def _reassemble(spectrum: Spectrum, values: np.ndarray) -> SymMatrix:
    V = spectrum.eigenvectors
    return symmetrize((V * values) @ V.T)


def project_psd(A) -> SymMatrix:
    """Frobenius 意义下最近的 PSD 矩阵: 负特征值置零"""
    spectrum = sym_eigendecompose(A)
    return _reassemble(spectrum, np.maximum(spectrum.eigenvalues, 0.0))


def prox_trace_psd(A, t: float) -> SymMatrix:
    """argmin_{X >= 0} 0.5 |X - A|_F^2 + t tr(X); PSD 锥上核范数即迹, 特征值平移后截断"""
    if t < 0:
        raise ValueError(f"近端参数 t 不能为负: {t}")
    spectrum = sym_eigendecompose(A)
    return _reassemble(spectrum, np.maximum(spectrum.eigenvalues - t, 0.0))


def as_metric(A) -> MetricMatrix:
    """包装为 MetricMatrix, 计算秩、非零奇异值与迹; 不做 PSD 投影"""
    A = symmetrize(A)
    eigenvalues = sym_eigendecompose(A).eigenvalues
    sigma_1 = max(float(eigenvalues[0]), 0.0)
    if sigma_1 == 0.0:
        return MetricMatrix(A, 0, np.zeros(0), float(np.trace(A)))
    nonzero = eigenvalues[eigenvalues > TOL_RANK_REL * sigma_1]
    return MetricMatrix(A, int(nonzero.size), nonzero, float(np.trace(A)))


def is_psd(A, tol_rel: float = TOL_PSD_REL) -> bool:
    eigenvalues = sym_eigendecompose(A).eigenvalues
    scale = max(float(eigenvalues[0]), 0.0)
    return bool(eigenvalues[-1] >= -tol_rel * scale)


def _check_rank(d: int, r: int):
    if d < 1 or r < 1 or r > d:
        raise InvalidRank(f"需要 1 <= r <= d, 实际 d={d}, r={r}")


def orthonormal_columns(d: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """标准正态列的 QR 正交化, 符号按 R 的对角线修正 (Haar 分布)"""
    _check_rank(d, r)
    G = rng.standard_normal((d, r))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def generate_metric_orthonormal(d: int, r: int, rng: np.random.Generator) -> MetricMatrix:
    """Sigma* = (d / sqrt(r)) U U^T, 所有非零奇异值为 d/sqrt(r), |Sigma*|_F = d"""
    U = orthonormal_columns(d, r, rng)
    scale = d / np.sqrt(r)
    matrix = symmetrize(scale * (U @ U.T))
    return MetricMatrix(matrix, r, np.full(r, scale), float(scale * r))


def generate_metric_wishart(d: int, r: int, rng: np.random.Generator) -> MetricMatrix:
    """Sigma* = L L^T / |L L^T|_F, L 为 d x r 标准正态矩阵"""
    _check_rank(d, r)
    L = rng.standard_normal((d, r))
    G = L @ L.T
    return as_metric(G / np.linalg.norm(G, 'fro'))


def isotropic_metric(d: int, sigma: float = 1.0) -> MetricMatrix:
    """Sigma* = sigma I_d, 用于闭式诊断"""
    return MetricMatrix(sigma * np.eye(d), d, np.full(d, float(sigma)), float(sigma * d))


def _matrix_of(value) -> np.ndarray:
    return value.matrix if isinstance(value, MetricMatrix) else np.asarray(value, dtype=float)


def normalized_error(est, truth) -> float:
    """|Sigma_hat - Sigma*|_F / |Sigma*|_F"""
    E, T = _matrix_of(est), _matrix_of(truth)
    if E.shape != T.shape:
        raise DimMismatch(f"维度不一致: {E.shape} vs {T.shape}")
    return float(np.linalg.norm(E - T, 'fro') / np.linalg.norm(T, 'fro'))


def mahalanobis_sq(x, xp, sigma) -> float:
    """(x - x')^T Sigma (x - x')"""
    S = _matrix_of(sigma)
    diff = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    if diff.shape != (S.shape[0],):
        raise DimMismatch(f"向量维度 {diff.shape} 与度量矩阵 {S.shape} 不一致")
    return float(diff @ S @ diff)
