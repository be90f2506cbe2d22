"""
Mamdani 模糊 PSS

输入：转速偏差 Δω 与其导数 dΔω/dt，各 7 个语言值；7×7 规则表；
min 触发、截顶、max 聚合，采样网格上取重心解模糊。
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from .errors import EmptySet, InvalidParams

logger = logging.getLogger(__name__)

LABELS = ('NB', 'NM', 'NS', 'ZE', 'PS', 'PM', 'PB')
ZE = LABELS.index('ZE')


@dataclass(frozen=True)
class TriangularMf:
    """三角隶属函数；shoulder='left'/'right' 时在中心外侧饱和为 1"""

    left: float
    center: float
    right: float
    shoulder: str = ''

    def __post_init__(self):
        if not self.left <= self.center <= self.right:
            raise InvalidParams(f"需要 left <= center <= right: {self.left}, {self.center}, {self.right}")
        if self.shoulder not in ('', 'left', 'right'):
            raise InvalidParams(f"未知的肩型: {self.shoulder!r}")

    def grade(self, x):
        x = np.asarray(x, dtype=float)
        if self.shoulder == 'left' or self.center == self.left:
            up = np.where(x >= self.center, 1.0, 0.0) if self.shoulder != 'left' else np.ones_like(x)
        else:
            up = np.clip((x - self.left) / (self.center - self.left), 0.0, 1.0)
        if self.shoulder == 'right' or self.center == self.right:
            down = np.where(x <= self.center, 1.0, 0.0) if self.shoulder != 'right' else np.ones_like(x)
        else:
            down = np.clip((self.right - x) / (self.right - self.center), 0.0, 1.0)
        return np.minimum(up, down)

    def scaled(self, factor: float) -> 'TriangularMf':
        return TriangularMf(self.left * factor, self.center * factor, self.right * factor,
                            self.shoulder)


@dataclass(frozen=True)
class FuzzyPartition:
    """归一化论域 [-1, 1] 上的 7 个语言值，NB/PB 为肩型"""

    mfs: Tuple[TriangularMf, ...]

    def __post_init__(self):
        if len(self.mfs) != len(LABELS):
            raise InvalidParams(f"需要 {len(LABELS)} 个隶属函数，得到 {len(self.mfs)}")
        if self.mfs[0].shoulder != 'left' or self.mfs[-1].shoulder != 'right':
            raise InvalidParams("最外侧语言值必须为肩型")
        if any(mf.shoulder for mf in self.mfs[1:-1]):
            raise InvalidParams("只有 NB/PB 可以是肩型")

        centers = np.array([mf.center for mf in self.mfs])
        if np.any(np.diff(centers) <= 0):
            raise InvalidParams(f"中心必须严格递增: {centers}")
        if self.mfs[ZE].center != 0.0:
            raise InvalidParams(f"ZE 中心必须为 0: {self.mfs[ZE].center}")
        for i in range(len(LABELS)):
            a, b = self.mfs[i], self.mfs[-1 - i]
            if not (np.isclose(a.left, -b.right, atol=1e-12)
                    and np.isclose(a.center, -b.center, atol=1e-12)
                    and np.isclose(a.right, -b.left, atol=1e-12)):
                raise InvalidParams(f"划分不对称: {LABELS[i]} 与 {LABELS[-1 - i]}")
        for a, b in zip(self.mfs[:-1], self.mfs[1:]):
            if not a.right > b.left:
                raise InvalidParams("相邻隶属函数之间存在空隙")

    @cached_property
    def _breaks(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (np.array([mf.left for mf in self.mfs]),
                np.array([mf.center for mf in self.mfs]),
                np.array([mf.right for mf in self.mfs]))

    def grades(self, x: float) -> np.ndarray:
        """一次算出 7 个隶属度"""
        left, center, right = self._breaks
        with np.errstate(divide='ignore', invalid='ignore'):
            up = np.where(center > left, (x - left) / (center - left), np.where(x >= center, 1.0, 0.0))
            down = np.where(right > center, (right - x) / (right - center), np.where(x <= center, 1.0, 0.0))
        up = np.clip(up, 0.0, 1.0)
        down = np.clip(down, 0.0, 1.0)
        up[0] = 1.0
        down[-1] = 1.0
        return np.minimum(up, down)

    @property
    def half_width(self) -> float:
        """PS 的中心，默认划分下即三角形半底宽"""
        return self.mfs[ZE + 1].center

    def with_half_width(self, half_width: float) -> 'FuzzyPartition':
        """按比例缩放所有断点，保持对称"""
        if half_width <= 0:
            raise InvalidParams(f"半底宽必须为正: {half_width}")
        factor = half_width / self.half_width
        return FuzzyPartition(tuple(mf.scaled(factor) for mf in self.mfs))

    def breakpoints(self) -> list:
        return [[mf.left, mf.center, mf.right] for mf in self.mfs]

    @classmethod
    def from_breakpoints(cls, rows: Sequence[Sequence[float]]) -> 'FuzzyPartition':
        if len(rows) != len(LABELS):
            raise InvalidParams(f"需要 {len(LABELS)} 组断点")
        mfs = []
        for i, row in enumerate(rows):
            if len(row) != 3:
                raise InvalidParams(f"{LABELS[i]} 的断点必须为 [left, center, right]")
            shoulder = 'left' if i == 0 else 'right' if i == len(LABELS) - 1 else ''
            mfs.append(TriangularMf(*(float(v) for v in row), shoulder=shoulder))
        return cls(tuple(mfs))


def default_partition(half_width: float = 1.0 / 3.0) -> FuzzyPartition:
    """中心在 k·w 的等距划分，相邻重叠 50%"""
    mfs = []
    for i in range(len(LABELS)):
        c = (i - ZE) * half_width
        shoulder = 'left' if i == 0 else 'right' if i == len(LABELS) - 1 else ''
        mfs.append(TriangularMf(c - half_width, c, c + half_width, shoulder))
    return FuzzyPartition(tuple(mfs))


def scaled_partition(p: FuzzyPartition, half_width: float) -> FuzzyPartition:
    return p.with_half_width(half_width)


@dataclass(frozen=True)
class RuleTable:
    """grid[i][j] = 输出语言值下标，i 为 e 的语言值，j 为 de 的语言值"""

    grid: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        n = len(LABELS)
        if len(self.grid) != n or any(len(row) != n for row in self.grid):
            raise InvalidParams("规则表必须为 7×7")
        for i in range(n):
            for j in range(n):
                k = self.grid[i][j]
                if not 0 <= k < n:
                    raise InvalidParams(f"规则 ({LABELS[i]}, {LABELS[j]}) 输出越界: {k}")
                if self.grid[n - 1 - i][n - 1 - j] != n - 1 - k:
                    raise InvalidParams(f"规则表不满足反对称: ({LABELS[i]}, {LABELS[j]})")
        if self.grid[ZE][ZE] != ZE:
            raise InvalidParams("规则 (ZE, ZE) 必须输出 ZE")

    @cached_property
    def flat(self) -> np.ndarray:
        return np.array(self.grid, dtype=int).ravel()

    def labels(self) -> list:
        return [[LABELS[k] for k in row] for row in self.grid]

    @classmethod
    def from_labels(cls, rows: Sequence[Sequence[str]]) -> 'RuleTable':
        try:
            return cls(tuple(tuple(LABELS.index(str(s).upper()) for s in row) for row in rows))
        except ValueError as e:
            raise InvalidParams(f"规则表中有未知语言值: {e}")


def default_rule_table() -> RuleTable:
    """下标求和表：out = clamp(i + j - ZE)"""
    n = len(LABELS)
    return RuleTable(tuple(tuple(min(max(i + j - ZE, 0), n - 1) for j in range(n))
                           for i in range(n)))


@dataclass(frozen=True)
class FuzzySet:
    """在均匀网格上采样的模糊集"""

    x: np.ndarray
    mu: np.ndarray


@dataclass(frozen=True)
class FlcConfig:
    """模糊控制器配置（构造后不可变）"""

    Ke: float = 650.0
    Kde: float = 52.0
    Ku: float = 0.09
    partition_e: FuzzyPartition = field(default_factory=default_partition)
    partition_de: FuzzyPartition = field(default_factory=default_partition)
    partition_u: FuzzyPartition = field(default_factory=default_partition)
    rules: RuleTable = field(default_factory=default_rule_table)
    u_min: float = -0.1
    u_max: float = 0.1
    resolution: int = 201

    def __post_init__(self):
        if self.Ke <= 0 or self.Kde <= 0 or self.Ku <= 0:
            raise InvalidParams(f"比例因子必须为正: Ke={self.Ke}, Kde={self.Kde}, Ku={self.Ku}")
        if not self.u_min < self.u_max:
            raise InvalidParams(f"输出限幅需要 u_min < u_max: [{self.u_min}, {self.u_max}]")
        if self.resolution < 3 or self.resolution % 2 == 0:
            raise InvalidParams(f"解模糊网格点数必须为不小于 3 的奇数: {self.resolution}")

    @cached_property
    def grid(self) -> np.ndarray:
        """关于 0 严格对称的输出网格"""
        half = np.linspace(0.0, 1.0, (self.resolution + 1) // 2)
        return np.concatenate([-half[:0:-1], half])

    @cached_property
    def output_samples(self) -> np.ndarray:
        """7 × resolution，输出语言值在网格上的隶属度"""
        return np.array([mf.grade(self.grid) for mf in self.partition_u.mfs])

    def to_dict(self) -> dict:
        return {
            'ke': self.Ke, 'kde': self.Kde, 'ku': self.Ku,
            'umin': self.u_min, 'umax': self.u_max, 'resolution': self.resolution,
            'partition_e': self.partition_e.breakpoints(),
            'partition_de': self.partition_de.breakpoints(),
            'partition_u': self.partition_u.breakpoints(),
            'rules': self.rules.labels(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'FlcConfig':
        known = {'ke', 'kde', 'ku', 'umin', 'umax', 'resolution',
                 'partition_e', 'partition_de', 'partition_u', 'rules'}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidParams(f"flc 中未知的键: {', '.join(unknown)}")

        kwargs = {}
        for key, name in (('ke', 'Ke'), ('kde', 'Kde'), ('ku', 'Ku'),
                          ('umin', 'u_min'), ('umax', 'u_max')):
            if key in data:
                kwargs[name] = float(data[key])
        if 'resolution' in data:
            kwargs['resolution'] = int(data['resolution'])
        for key in ('partition_e', 'partition_de', 'partition_u'):
            if key in data:
                kwargs[key] = FuzzyPartition.from_breakpoints(data[key])
        if 'rules' in data:
            kwargs['rules'] = RuleTable.from_labels(data['rules'])
        return cls(**kwargs)


def fuzzify(p: FuzzyPartition, x: float) -> np.ndarray:
    """7 个隶属度，x 先限制在 [-1, 1]"""
    return p.grades(min(max(float(x), -1.0), 1.0))


def infer(cfg: FlcConfig, e: float, de: float) -> FuzzySet:
    """Mamdani 推理，输入为已乘比例因子的归一化值"""
    strength = np.minimum.outer(fuzzify(cfg.partition_e, e), fuzzify(cfg.partition_de, de))

    # 同一输出语言值取各规则触发强度的最大值
    levels = np.zeros(len(LABELS))
    np.maximum.at(levels, cfg.rules.flat, strength.ravel())

    mu = np.max(np.minimum(levels[:, None], cfg.output_samples), axis=0)
    return FuzzySet(x=cfg.grid, mu=mu)


def defuzzify_centroid(fs: FuzzySet) -> float:
    total = float(np.sum(fs.mu))
    if total <= 0.0:
        raise EmptySet("聚合模糊集为空")
    return float(np.sum(fs.x * fs.mu) / total)


def flc_output(cfg: FlcConfig, dw: float, ddw: float, clamp: bool = True) -> float:
    """u = Ku · centroid(infer(Ke·Δω, Kde·dΔω/dt))"""
    u = cfg.Ku * defuzzify_centroid(infer(cfg, cfg.Ke * dw, cfg.Kde * ddw))
    if clamp:
        u = min(max(u, cfg.u_min), cfg.u_max)
    return u


def control_surface(cfg: FlcConfig, dw_values: Sequence[float],
                    ddw_values: Sequence[float]) -> np.ndarray:
    """控制曲面 surface[i, j] = flc_output(dw_i, ddw_j)，不限幅"""
    return np.array([[flc_output(cfg, a, b, clamp=False) for b in ddw_values] for a in dw_values])
