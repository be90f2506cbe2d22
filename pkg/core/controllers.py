"""
常规 PSS：增益 + 隔直(washout) + 单级超前补偿

传递函数 K_stab · sT_w/(1+sT_w) · (1+sT1)/(1+sT2)，二阶状态实现。
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import expm

from .errors import InvalidParams
from .plant_params import GeneratorParams, ExciterParams
from .smib_model import KConstants, StateSpace, build_state_space, electromechanical_mode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CpssParams:
    """常规 PSS 参数"""

    K_stab: float
    T1: float
    T_w: float = 10.0
    T2: float = 0.05
    u_min: float = -0.1
    u_max: float = 0.1

    def __post_init__(self):
        if self.K_stab < 0:
            raise InvalidParams(f"K_stab 不能为负: {self.K_stab}")
        if self.T_w <= 0 or self.T2 <= 0:
            raise InvalidParams(f"需要 T_w, T2 > 0: T_w={self.T_w}, T2={self.T2}")
        if self.T1 < 0:
            raise InvalidParams(f"T1 不能为负: {self.T1}")
        if not self.u_min < self.u_max:
            raise InvalidParams(f"输出限幅需要 u_min < u_max: [{self.u_min}, {self.u_max}]")

    @property
    def is_lead(self) -> bool:
        return self.T1 > self.T2

    def to_dict(self) -> dict:
        return {'kstab': self.K_stab, 'tw': self.T_w, 't1': self.T1, 't2': self.T2,
                'umin': self.u_min, 'umax': self.u_max}

    @classmethod
    def from_dict(cls, data: dict) -> 'CpssParams':
        keys = {'kstab': 'K_stab', 'tw': 'T_w', 't1': 'T1', 't2': 'T2',
                'umin': 'u_min', 'umax': 'u_max'}
        unknown = sorted(set(data) - set(keys))
        if unknown:
            raise InvalidParams(f"cpss 中未知的键: {', '.join(unknown)}")
        try:
            return cls(**{keys[k]: float(v) for k, v in data.items()})
        except TypeError as e:
            raise InvalidParams(f"cpss 参数不完整: {e}")


@dataclass
class LinearBlock:
    """带输出限幅的线性状态空间块  dx/dt = A x + B u,  y = sat(C x + D u)"""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    u_min: float = -np.inf
    u_max: float = np.inf
    x: np.ndarray = None
    _zoh_cache: Dict[float, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        self.D = float(self.D)
        if self.x is None:
            self.x = np.zeros(self.n_states)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def reset(self):
        self.x = np.zeros(self.n_states)

    def derivative(self, x: np.ndarray, u: float) -> np.ndarray:
        return self.A @ x + self.B * u

    def output(self, x: np.ndarray, u: float, clamp: bool = True) -> float:
        y = float(self.C @ x + self.D * u)
        if clamp:
            y = min(max(y, self.u_min), self.u_max)
        return y

    def discretize(self, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        """零阶保持精确离散化，用增广矩阵指数同时得到 Ad 和 Bd"""
        if dt not in self._zoh_cache:
            n = self.n_states
            aug = np.zeros((n + 1, n + 1))
            aug[:n, :n] = self.A
            aug[:n, n] = self.B
            phi = expm(aug * dt)
            self._zoh_cache[dt] = (phi[:n, :n], phi[:n, n])
        return self._zoh_cache[dt]

    def step(self, u: float, dt: float) -> float:
        """输出当前时刻的限幅值，然后把状态推进一个步长"""
        if dt <= 0:
            raise InvalidParams(f"步长必须为正: {dt}")
        y = self.output(self.x, u)
        ad, bd = self.discretize(dt)
        self.x = ad @ self.x + bd * u
        return y

    def frequency_response(self, omega: float) -> complex:
        """连续时间传递函数在 s = jω 处的值（不含限幅）"""
        s = 1j * omega
        n = self.n_states
        return complex(self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.B) + self.D)

    @property
    def dc_gain(self) -> float:
        return float(self.D - self.C @ np.linalg.solve(self.A, self.B))

    @property
    def hf_gain(self) -> float:
        return self.D


def cpss_build(p: CpssParams) -> LinearBlock:
    """二阶实现：x1 为隔直滤波器状态，x2 为超前环节状态"""
    if not isinstance(p, CpssParams):
        raise InvalidParams(f"需要 CpssParams，得到 {type(p).__name__}")

    ratio = p.T1 / p.T2
    A = np.array([[-1.0 / p.T_w, 0.0],
                  [-1.0 / p.T2, -1.0 / p.T2]])
    B = np.array([1.0 / p.T_w, 1.0 / p.T2])
    C = p.K_stab * np.array([-ratio, 1.0 - ratio])
    D = p.K_stab * ratio
    return LinearBlock(A=A, B=B, C=C, D=D, u_min=p.u_min, u_max=p.u_max)


def cpss_step(block: LinearBlock, dw: float, dt: float) -> float:
    """
    独立的逐步推进接口：输出当前时刻的限幅值，再以零阶保持推进一个步长。
    供在仿真引擎之外驱动 CPSS 使用；simulate 把 CPSS 与对象合并后整体用 RK4 积分，
    两者的差别随步长线性减小
    """
    return block.step(dw, dt)


def cpss_frequency_response(p: CpssParams, omega: float) -> complex:
    """解析传递函数"""
    s = 1j * omega
    return p.K_stab * (s * p.T_w / (1 + s * p.T_w)) * ((1 + s * p.T1) / (1 + s * p.T2))


def gep_response(k: KConstants, gp: GeneratorParams, ep: ExciterParams, omega: float) -> complex:
    """转子锁定时 u_pss -> ΔTe 的频率响应（励磁+磁场回路的相位滞后）"""
    ss = build_state_space(k, gp, ep)
    sub = ss.A[2:, 2:]
    b = ss.B_u[2:]
    x = np.linalg.solve(1j * omega * np.eye(sub.shape[0]) - sub, b)
    return complex(k.K2 * x[0])


def cpss_phase_compensation(k: KConstants, gp: GeneratorParams, ep: ExciterParams,
                            zeta_target: float = 0.3, T_w: float = 10.0, T2: float = 0.05,
                            u_min: float = -0.1, u_max: float = 0.1,
                            max_lead_deg: float = 60.0) -> CpssParams:
    """
    相位补偿法整定：在机电模式频率处补偿 GEP 的相位滞后，
    再按目标阻尼比估算需要的阻尼转矩并折算为 K_stab
    """
    ss = build_state_space(k, gp, ep)
    lam = electromechanical_mode(ss)
    omega_n = abs(lam.imag)
    zeta0 = -lam.real / abs(lam)

    gep = gep_response(k, gp, ep, omega_n)
    washout_phase = np.angle(1j * omega_n * T_w / (1 + 1j * omega_n * T_w))
    lead = float(np.clip(-np.angle(gep) - washout_phase, 0.0, np.radians(max_lead_deg)))

    t1 = np.tan(lead + np.arctan(omega_n * T2)) / omega_n
    t1 = float(np.clip(t1, T2, 1.0))

    unit = CpssParams(K_stab=1.0, T1=t1, T_w=T_w, T2=T2, u_min=u_min, u_max=u_max)
    damping_per_gain = (gep * cpss_frequency_response(unit, omega_n)).real
    d_needed = 2.0 * max(zeta_target - zeta0, 0.0) * omega_n * gp.M
    if damping_per_gain > 0:
        k_stab = float(np.clip(d_needed / damping_per_gain, 0.1, 50.0))
    else:
        logger.warning("补偿后阻尼转矩仍为负，K_stab 取下限")
        k_stab = 0.1

    logger.info(f"相位补偿整定: ωn={omega_n:.3f} rad/s, 超前 {np.degrees(lead):.1f}°, "
                f"K_stab={k_stab:.3f}, T1={t1:.4f}")
    return CpssParams(K_stab=k_stab, T1=t1, T_w=T_w, T2=T2, u_min=u_min, u_max=u_max)


def close_loop(ss: StateSpace, block: LinearBlock) -> StateSpace:
    """把线性 PSS 接入开环模型（忽略限幅），用于闭环特征值分析"""
    n, m = ss.n, block.n_states
    c_w = ss.C_omega
    d = block.D

    A = np.zeros((n + m, n + m))
    A[:n, :n] = ss.A + np.outer(ss.B_u, c_w) * d
    A[:n, n:] = np.outer(ss.B_u, block.C)
    A[n:, :n] = np.outer(block.B, c_w)
    A[n:, n:] = block.A

    pad = np.zeros(m)
    return StateSpace(A=A,
                      B_tm=np.concatenate([ss.B_tm, pad]),
                      B_u=np.zeros(n + m),
                      C_omega=np.concatenate([c_w, pad]),
                      C_delta=np.concatenate([ss.C_delta, pad]),
                      labels=tuple(ss.labels) + tuple(f'pss{i + 1}' for i in range(m)))
