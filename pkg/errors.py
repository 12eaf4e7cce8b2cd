"""异常定义, exit_code 为命令行退出码"""


class PaqError(Exception):
    exit_code = 1


class ConfigError(PaqError):
    """配置文件或参数非法"""
    exit_code = 2


class NumericalError(PaqError):
    """数值计算失败"""
    exit_code = 3


class NonFinite(NumericalError):
    pass


class InvalidRank(NumericalError):
    pass


class DimMismatch(NumericalError):
    pass


class DegenerateDirection(NumericalError):
    """查询方向落在度量矩阵零空间附近, 滑块永远到不了边界"""


class BudgetTooSmall(NumericalError):
    pass


class PreconditionViolated(NumericalError):
    pass


class NoProgress(NumericalError):
    """回溯线搜索步长下溢"""


class ZeroResponse(NumericalError):
    pass


class ZeroMatrix(NumericalError):
    pass


class InvalidDim(NumericalError):
    """所求矩不存在"""


class PropertyViolated(NumericalError):
    def __init__(self, prop: str, index: int, detail: str = ""):
        self.prop = prop
        self.index = index
        super().__init__(f"{prop} 在第 {index} 个响应处不成立 {detail}".strip())


class IoError(NumericalError):
    pass
