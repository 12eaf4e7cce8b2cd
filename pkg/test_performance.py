import time

import numpy as np
from memory_profiler import memory_usage, profile

from estimators import RankOneRegression, fit_paq
from linalg_core import generate_metric_orthonormal
from models import NoiseModel, SolverConfig
from paq_pipeline import choose_lambda, policy_config, run_pipeline


def build_problem(N=20000, d=50, r=9, seed=0):
    """生成一组重尾噪声下的流水线数据"""
    rng = np.random.default_rng(seed)
    sigma = generate_metric_orthonormal(d, r, rng)
    noise = NoiseModel("uniform", 200.0, 200.0)
    cfg = policy_config(sigma, noise, N, d)
    data = run_pipeline(sigma, cfg, rng)
    lam = choose_lambda(sigma, noise, cfg.n, cfg.m, d, cfg.tau)
    return sigma, data, lam


@profile
def profile_gradient(problem, repeats=50):
    """梯度只做秩一累加, 不构造 n 个 d x d 感知矩阵"""
    start_time = time.time()
    X = np.eye(problem.d)
    for _ in range(repeats):
        problem.value_and_grad(X)
    print(f"{repeats} 次梯度耗时: {time.time() - start_time:.2f}s")


@profile
def profile_solver(data, lam, max_iters=200):
    start_time = time.time()
    result = fit_paq(data, 200.0, SolverConfig(lam=lam, max_iters=max_iters))
    print(f"{result.iterations} 步求解耗时: {time.time() - start_time:.2f}s")


def test_gradient_memory_is_bounded():
    """n = 10000, d = 50 时显式构造感知矩阵需要约 200MB; 秩一累加应远低于此"""
    _, data, _ = build_problem()
    problem = RankOneRegression(data.sensing_vectors, data.truncated_responses, 200.0)
    X = np.eye(problem.d)
    baseline = max(memory_usage(-1, interval=0.05, timeout=0.2))
    peak = max(memory_usage((problem.value_and_grad, (X,)), interval=0.01))
    assert peak - baseline < 100


def run_performance_tests():
    """运行所有性能测试"""
    print("Generating pipeline data...")
    _, data, lam = build_problem()
    problem = RankOneRegression(data.sensing_vectors, data.truncated_responses, 200.0)

    print("\n=== Profiling gradient memory ===")
    profile_gradient(problem)

    print("\n=== Testing different sample sizes ===")
    for N in [5000, 20000, 80000]:
        start = time.time()
        _, data_n, _ = build_problem(N=N)
        print(f"N={N}: n={data_n.n}, 流水线耗时 {time.time() - start:.2f}s")

    print("\n=== Profiling solver ===")
    profile_solver(data, lam)


if __name__ == "__main__":
    run_performance_tests()
