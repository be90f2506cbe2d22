"""
异常定义
"""


class PssLabError(Exception):
    """所有实验室错误的基类"""


class InvalidParams(PssLabError, ValueError):
    """参数违反约束"""


class ConfigError(PssLabError, ValueError):
    """配置文件错误（带文件和行号）"""

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class NoEquilibrium(PssLabError):
    """给定运行点没有 |delta0| < pi/2 的稳态解"""


class ConvergenceFailure(PssLabError):
    """特征值迭代不收敛"""


class EmptySet(PssLabError):
    """聚合模糊集全为零，无法解模糊"""


class Diverged(PssLabError):
    """仿真发散，携带截断的轨迹"""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class FitFailed(PssLabError):
    """阻尼时间常数拟合失败（峰值不足或包络不衰减）"""


class LengthMismatch(PssLabError, ValueError):
    """染色体长度与基因定义不一致"""


class DegenerateFitness(PssLabError):
    """比例选择时所有平移后的适应度为零"""
