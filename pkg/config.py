# 日志配置
LOG_LEVEL = "INFO"                         # 日志级别 DEBUG/INFO/WARNING/ERROR
LOG_FILE = "./paq_metric.log"              # 程序输出日志路径, None 表示不写文件
LOG_RETENTION_DAYS = 7                     # 日志保留天数
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"  # 日志格式
LOG_CONSOLE = True                         # 是否输出到终端

# 数值容差
TOL_PSD_REL = 1e-10                        # PSD 判定: 最小特征值 >= -TOL_PSD_REL * sigma_1
TOL_RANK_REL = 1e-8                        # 秩判定: 特征值 > TOL_RANK_REL * sigma_1
TOL_DEGENERATE_REL = 1e-12                 # a^T Sigma a <= 该值 * sigma_1 * |a|^2 视为退化方向

# PAQ 求解器 (加速近端梯度)
SOLVER_MAX_ITERS = 5000                    # 最大迭代次数
SOLVER_REL_TOL = 1e-9                      # 目标函数相对变化阈值
SOLVER_PATIENCE = 5                        # 连续满足阈值的迭代次数
SOLVER_BACKTRACK_SHRINK = 0.5              # 回溯线搜索步长收缩系数
SOLVER_POWER_ITERS = 20                    # Lipschitz 常数幂迭代次数
SOLVER_MIN_STEP = 1e-30                    # 步长下溢阈值
SOLVER_STEP_GROWTH = 2.0                   # 每次接受步长后尝试放大的倍数
SOLVER_MAX_STEP_RATIO = 1e6                # 步长上限为 1/L 的该倍数
SOLVER_EXACT_MAX_PARAMS = 500              # lambda = 0 时 d(d+1)/2 不超过该值则先解正规方程

# 序数查询基线 (投影次梯度)
HINGE_MAX_ITERS = 3000                     # 次梯度迭代预算
HINGE_STEP_SCALE = 1.0                     # 步长 c / sqrt(k) 中的 c (按次梯度范数归一化)

# 参数策略常数
DEFAULT_C1_SCALE = 0.03                    # lambda_n 公式中的 C1 (d=50, r=9, y=eta_up=200 下交叉验证所得)
DEFAULT_C2_SCALE = 1.0                     # 样本量条件中的 C2
DEFAULT_C_SCALE = 1.0                      # 误差上界中的 C
C1_CV_GRID = [0.01, 0.03, 0.1, 0.3, 1.0]   # 交叉验证 C1 的候选值
C1_CV_FOLDS = 5                            # 交叉验证折数
C1_CV_MAX_ITERS = 1000                     # 交叉验证时每折的迭代预算

# 实验默认值 (数值模拟: 维度/秩/平均参数扫描)
DEFAULT_Y = 200.0                          # 边界值 y
DEFAULT_D = 50                             # 维度
DEFAULT_R = 15                             # 秩
DEFAULT_ETA_UP = 10.0                      # 均匀噪声上界
SWEEP_TRIALS = 20                          # 每个网格点的重复次数

# 查询类型对比实验 (无噪声)
FIG2_Y = 10.0                              # 序数查询与 PAQ 的边界值
FIG2_D = 50
FIG2_R = 10
FIG2_LAMBDA = 0.05                         # 所有估计器的正则化参数
FIG2_TRIALS = 10
FIG2_N_GRID = [200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000]

# 查询类型 (CSV 中 query_type 列的取值)
QUERY_TYPES = ["pairwise", "triplet", "ranking-8", "ranking-16", "paq-direct"]
PAQ_QUERY_TYPES = ["paq", "paq-naive"]

# 诊断默认值
MC_SAMPLES = 1_000_000                     # Monte Carlo 样本数
MC_BATCHES = 100                           # 批均值法的批数
MC_Z_LIMIT = 5.0                           # 可接受的 z 分数上限

# 输出
OUTPUT_DIR = "./results"                   # 默认输出目录
CSV_HEADER = [
    "experiment", "query_type", "N", "d", "r", "m", "tau", "lambda",
    "trial", "seed", "normalized_error", "wall_time_s", "truncation_hits",
]
CSV_FLOAT_DIGITS = 10                      # 浮点数有效数字
SVG_HASH_SALT = "paq-metric"               # 固定 SVG 元素 id, 保证输出字节一致

# 各实验的默认配置 (配置文件中的键覆盖这里的值)
EXPERIMENT_DEFAULTS = {
    "compare_queries": {
        "grid": {"N": FIG2_N_GRID, "d": [FIG2_D], "r": [FIG2_R]},
        "y": FIG2_Y, "eta_up": 0.0, "trials": FIG2_TRIALS, "lambda_scale": FIG2_LAMBDA,
    },
    "sweep_d": {
        "grid": {"N_over_d": [100, 200, 400, 800], "d": [30, 50, 80], "r": [DEFAULT_R]},
        "y": DEFAULT_Y, "eta_up": DEFAULT_ETA_UP, "trials": SWEEP_TRIALS, "lambda_scale": DEFAULT_C1_SCALE,
    },
    "sweep_r": {
        "grid": {"N_over_d": [200, 400, 600, 800, 1000], "d": [DEFAULT_D], "r": [5, 7, 9, 11, 15]},
        "y": DEFAULT_Y, "eta_up": DEFAULT_ETA_UP, "trials": SWEEP_TRIALS, "lambda_scale": DEFAULT_C1_SCALE,
    },
    "sweep_m": {
        "grid": {"N_over_d": [400, 1000], "d": [25, 50], "r": [9], "m": [1, 2, 4, 8, 16, 32]},
        "y": DEFAULT_Y, "eta_up": 200.0, "trials": SWEEP_TRIALS, "lambda_scale": DEFAULT_C1_SCALE,
    },
    "diagnostics": {
        "grid": {}, "y": 12.0, "eta_up": 12.0, "trials": 1, "lambda_scale": DEFAULT_C1_SCALE,
    },
    "scale_check": {
        "grid": {"N": [4000], "d": [20], "r": [10]},
        "y": DEFAULT_Y, "eta_up": 100.0, "trials": 1, "lambda_scale": DEFAULT_C1_SCALE,
    },
}
DEFAULT_MASTER_SEED = 20240601             # 主随机种子
SCALE_CHECK_FACTORS = [0.01, 7.3]          # 尺度等变性检验的 c
SCALE_CHECK_LIMIT = 1e-6                   # 允许的最大相对偏差
