"""
SMIB 系统参数类（标幺值）
"""
from dataclasses import dataclass, asdict, field
import json

from .errors import InvalidParams


@dataclass(frozen=True)
class GeneratorParams:
    """发电机参数"""

    M: float = 9.26          # 惯性系数 M = 2H (s)
    T_d0p: float = 7.76      # d轴开路暂态时间常数 (s)
    D: float = 0.0           # 阻尼系数
    X_d: float = 0.973
    X_dp: float = 0.190
    X_q: float = 0.550

    def __post_init__(self):
        if self.M <= 0:
            raise InvalidParams(f"M 必须为正: {self.M}")
        if self.T_d0p <= 0:
            raise InvalidParams(f"T_d0p 必须为正: {self.T_d0p}")
        if not self.X_d > self.X_dp > 0:
            raise InvalidParams(f"需要 X_d > X_dp > 0: X_d={self.X_d}, X_dp={self.X_dp}")
        if self.X_q <= 0:
            raise InvalidParams(f"X_q 必须为正: {self.X_q}")
        if self.D < 0:
            raise InvalidParams(f"D 不能为负: {self.D}")


@dataclass(frozen=True)
class ExciterParams:
    """励磁系统参数（速率反馈型）"""

    K_a: float = 50.0
    T_a: float = 0.05
    K_f: float = 0.025
    T_f: float = 1.0

    def __post_init__(self):
        if self.K_a <= 0 or self.T_a <= 0 or self.T_f <= 0:
            raise InvalidParams(
                f"需要 K_a, T_a, T_f > 0: K_a={self.K_a}, T_a={self.T_a}, T_f={self.T_f}")
        if self.K_f < 0:
            raise InvalidParams(f"K_f 不能为负: {self.K_f}")


@dataclass(frozen=True)
class NetworkParams:
    """线路与本地负荷参数，R 允许为负（含负荷等效）"""

    R: float = -0.034
    X: float = 0.997
    G: float = 0.249
    B: float = 0.262
    f: float = 60.0

    def __post_init__(self):
        if self.X <= 0:
            raise InvalidParams(f"X 必须为正: {self.X}")
        if self.f <= 0:
            raise InvalidParams(f"f 必须为正: {self.f}")


@dataclass(frozen=True)
class OperatingPoint:
    """运行点"""

    P_e0: float = 1.0
    Q_e0: float = 0.015
    V_t0: float = 1.05

    def __post_init__(self):
        if self.V_t0 <= 0:
            raise InvalidParams(f"V_t0 必须为正: {self.V_t0}")


# 附录符号 -> (分组, 字段)
FLAT_KEYS = {
    'M': ('generator', 'M'),
    'Td0p': ('generator', 'T_d0p'),
    'D': ('generator', 'D'),
    'Xd': ('generator', 'X_d'),
    'Xdp': ('generator', 'X_dp'),
    'Xq': ('generator', 'X_q'),
    'Ka': ('exciter', 'K_a'),
    'Ta': ('exciter', 'T_a'),
    'Kf': ('exciter', 'K_f'),
    'Tf': ('exciter', 'T_f'),
    'R': ('network', 'R'),
    'X': ('network', 'X'),
    'G': ('network', 'G'),
    'B': ('network', 'B'),
    'f': ('network', 'f'),
    'Pe0': ('operating_point', 'P_e0'),
    'Qe0': ('operating_point', 'Q_e0'),
    'Vt0': ('operating_point', 'V_t0'),
}


@dataclass(frozen=True)
class PlantParams:
    """完整的 SMIB 参数集"""

    generator: GeneratorParams = field(default_factory=GeneratorParams)
    exciter: ExciterParams = field(default_factory=ExciterParams)
    network: NetworkParams = field(default_factory=NetworkParams)
    operating_point: OperatingPoint = field(default_factory=OperatingPoint)

    def to_dict(self) -> dict:
        """转换为扁平字典（附录符号）"""
        nested = asdict(self)
        return {key: nested[group][name] for key, (group, name) in FLAT_KEYS.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> 'PlantParams':
        """从扁平字典创建，缺失的键取默认值"""
        unknown = sorted(set(data) - set(FLAT_KEYS))
        if unknown:
            raise InvalidParams(f"未知的参数键: {', '.join(unknown)}")

        groups = {'generator': {}, 'exciter': {}, 'network': {}, 'operating_point': {}}
        for key, value in data.items():
            group, name = FLAT_KEYS[key]
            try:
                groups[group][name] = float(value)
            except (TypeError, ValueError):
                raise InvalidParams(f"参数 {key} 不是数值: {value!r}")

        return cls(
            generator=GeneratorParams(**groups['generator']),
            exciter=ExciterParams(**groups['exciter']),
            network=NetworkParams(**groups['network']),
            operating_point=OperatingPoint(**groups['operating_point']),
        )

    @classmethod
    def from_json(cls, json_str: str) -> 'PlantParams':
        return cls.from_dict(json.loads(json_str))

    def with_overrides(self, overrides: dict) -> 'PlantParams':
        """返回覆盖部分键后的新参数集"""
        data = self.to_dict()
        data.update(overrides)
        return PlantParams.from_dict(data)

    def at(self, op: OperatingPoint) -> 'PlantParams':
        """换一个运行点"""
        return PlantParams(self.generator, self.exciter, self.network, op)
