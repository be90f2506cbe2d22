"""
单机无穷大母线 (SMIB) 线性化模型

初始运行点求解、Heffron-Phillips K1~K6 常数、五阶开环状态空间以及特征值分析。
发电机为凸极机（忽略定子电阻），机端带本地负荷 G+jB，经线路 R+jX 接无穷大母线。
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import NoEquilibrium, ConvergenceFailure
from .plant_params import (GeneratorParams, ExciterParams, NetworkParams,
                           OperatingPoint, PlantParams)

logger = logging.getLogger(__name__)

STATE_LABELS = ('delta', 'omega', 'eqp', 'efd', 'xf')


@dataclass(frozen=True)
class InitialConditions:
    """稳态初值（角度相对无穷大母线）"""

    delta0: float
    Eqp0: float
    id0: float
    iq0: float
    Vinf: float
    vd0: float = 0.0
    vq0: float = 0.0
    Efd0: float = 0.0

    def reconstruct(self, gp: GeneratorParams) -> Tuple[float, float, float]:
        """由 dq 分量重建 (P, Q, V_t)"""
        vd = gp.X_q * self.iq0
        vq = self.Eqp0 - gp.X_dp * self.id0
        p = vd * self.id0 + vq * self.iq0
        q = vq * self.id0 - vd * self.iq0
        return p, q, float(np.hypot(vd, vq))


@dataclass(frozen=True)
class TheveninEquivalent:
    """从机端看出去的戴维南等值：V_e 经 R_e + jX_e"""

    V_e: float
    R_e: float
    X_e: float
    angle_shift: float  # delta_e = delta(对无穷大母线) + angle_shift


@dataclass(frozen=True)
class KConstants:
    K1: float
    K2: float
    K3: float
    K4: float
    K5: float
    K6: float
    omega_s: float

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.K1, self.K2, self.K3, self.K4, self.K5, self.K6)


@dataclass(frozen=True)
class StateSpace:
    """开环状态空间  dx/dt = A x + B_tm dTm + B_u u_pss"""

    A: np.ndarray
    B_tm: np.ndarray
    B_u: np.ndarray
    C_omega: np.ndarray
    C_delta: np.ndarray
    labels: Tuple[str, ...] = STATE_LABELS

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError(f"A 必须为方阵: {self.A.shape}")
        for name in ('B_tm', 'B_u', 'C_omega', 'C_delta'):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} 维数与 A 不一致")
        if len(self.labels) != n:
            raise ValueError("状态标签数目与 A 不一致")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def omega_dot(self, x: np.ndarray, d_tm: float) -> float:
        """转速偏差导数 dΔω/dt（PSS 不直接作用于转子方程）"""
        row = self.C_omega @ self.A
        return float(row @ x + (self.C_omega @ self.B_tm) * d_tm)


@dataclass(frozen=True)
class PlantModel:
    """一个运行点上的完整线性化结果"""

    ic: InitialConditions
    k: KConstants
    ss: StateSpace


def compute_initial_conditions(gp: GeneratorParams, net: NetworkParams,
                               op: OperatingPoint) -> InitialConditions:
    """以机端电压为参考求解稳态相量"""
    vt = complex(op.V_t0, 0.0)
    it = complex(op.P_e0, -op.Q_e0) / vt.conjugate()

    # q 轴位置：E_Q = V_t + jX_q I_t
    e_q = vt + 1j * gp.X_q * it
    if abs(e_q) == 0.0:
        raise NoEquilibrium("q 轴电势为零，无法确定转子位置")
    delta_q = np.angle(e_q)

    y_load = complex(net.G, net.B)
    z_line = complex(net.R, net.X)
    i_line = it - y_load * vt
    v_inf = vt - z_line * i_line
    if not np.isfinite(v_inf) or abs(v_inf) < 1e-12:
        raise NoEquilibrium(f"无穷大母线电压退化: {v_inf}")

    delta0 = float(np.angle(np.exp(1j * (delta_q - np.angle(v_inf)))))
    if abs(delta0) >= np.pi / 2:
        raise NoEquilibrium(
            f"运行点 P={op.P_e0}, Q={op.Q_e0}, Vt={op.V_t0} 超出能力范围 (delta0={delta0:.4f} rad)")

    # 旋转到 dq 坐标：X e^{-j delta_q} = x_q - j x_d
    rot = np.exp(-1j * delta_q)
    i_dq = it * rot
    v_dq = vt * rot
    iq0, id0 = i_dq.real, -i_dq.imag
    vq0, vd0 = v_dq.real, -v_dq.imag
    eqp0 = vq0 + gp.X_dp * id0
    efd0 = eqp0 + (gp.X_d - gp.X_dp) * id0

    logger.debug(f"初值: delta0={delta0:.6f}, Eqp0={eqp0:.6f}, Vinf={abs(v_inf):.6f}")

    return InitialConditions(delta0=delta0, Eqp0=float(eqp0), id0=float(id0), iq0=float(iq0),
                             Vinf=float(abs(v_inf)), vd0=float(vd0), vq0=float(vq0),
                             Efd0=float(efd0))


def thevenin_equivalent(net: NetworkParams, v_inf: float) -> TheveninEquivalent:
    """把本地负荷并入线路，得到等值电源和等值阻抗"""
    z_line = complex(net.R, net.X)
    k = 1.0 + z_line * complex(net.G, net.B)
    z_e = z_line / k
    return TheveninEquivalent(V_e=v_inf / abs(k), R_e=z_e.real, X_e=z_e.imag,
                              angle_shift=float(np.angle(k)))


def torque_equations(gp: GeneratorParams, th: TheveninEquivalent,
                     delta: float, eqp: float) -> Tuple[float, float, float, float]:
    """给定转子角（对无穷大母线）和 E'q，求非线性代数方程，返回 (Te, Vt, id, iq)"""
    d = delta + th.angle_shift
    a = th.R_e
    b = gp.X_q + th.X_e
    c = gp.X_dp + th.X_e
    det = a * a + b * c
    s = th.V_e * np.sin(d)
    r = eqp - th.V_e * np.cos(d)

    i_d = (b * r - a * s) / det
    i_q = (a * r + c * s) / det
    v_d = gp.X_q * i_q
    v_q = eqp - gp.X_dp * i_d
    te = eqp * i_q + (gp.X_q - gp.X_dp) * i_d * i_q
    return float(te), float(np.hypot(v_d, v_q)), float(i_d), float(i_q)


def compute_k_constants(gp: GeneratorParams, net: NetworkParams,
                        ic: InitialConditions) -> KConstants:
    """Heffron-Phillips 常数（含本地负荷的凸极机解析式）"""
    th = thevenin_equivalent(net, ic.Vinf)
    d = ic.delta0 + th.angle_shift
    a = th.R_e
    b = gp.X_q + th.X_e
    c = gp.X_dp + th.X_e
    det = a * a + b * c
    if det <= 0:
        raise NoEquilibrium(f"等值网络行列式非正: {det}")

    ve_s = th.V_e * np.sin(d)
    ve_c = th.V_e * np.cos(d)

    # 电流对 delta 与 E'q 的偏导
    did_dd = (b * ve_s - a * ve_c) / det
    diq_dd = (a * ve_s + c * ve_c) / det
    did_de = b / det
    diq_de = a / det

    i_d, i_q = ic.id0, ic.iq0
    eqp = ic.Eqp0
    x_diff = gp.X_q - gp.X_dp
    v_d = gp.X_q * i_q
    v_q = eqp - gp.X_dp * i_d
    v_t = np.hypot(v_d, v_q)

    k1 = eqp * diq_dd + x_diff * (i_d * diq_dd + i_q * did_dd)
    k2 = i_q + eqp * diq_de + x_diff * (i_d * diq_de + i_q * did_de)
    k3 = 1.0 / (1.0 + (gp.X_d - gp.X_dp) * did_de)
    k4 = (gp.X_d - gp.X_dp) * did_dd
    k5 = (v_d * gp.X_q * diq_dd - v_q * gp.X_dp * did_dd) / v_t
    k6 = (v_d * gp.X_q * diq_de + v_q * (1.0 - gp.X_dp * did_de)) / v_t

    k = KConstants(K1=float(k1), K2=float(k2), K3=float(k3), K4=float(k4),
                   K5=float(k5), K6=float(k6), omega_s=2.0 * np.pi * net.f)
    logger.debug("K 常数: " + ", ".join(f"K{i + 1}={v:.6f}" for i, v in enumerate(k.as_tuple())))
    return k


def build_state_space(k: KConstants, gp: GeneratorParams, ep: ExciterParams) -> StateSpace:
    """五阶状态空间: [Δδ, Δω, ΔE'q, ΔE_fd, x_f]"""
    A = np.zeros((5, 5))
    kf_tf = ep.K_f / ep.T_f

    A[0, 1] = k.omega_s

    A[1, 0] = -k.K1 / gp.M
    A[1, 1] = -gp.D / gp.M
    A[1, 2] = -k.K2 / gp.M

    A[2, 0] = -k.K4 / gp.T_d0p
    A[2, 2] = -1.0 / (k.K3 * gp.T_d0p)
    A[2, 3] = 1.0 / gp.T_d0p

    # T_a dE_fd/dt = -E_fd + K_a(-K5Δδ - K6ΔE'q - ΔV_f + u)，ΔV_f = (K_f/T_f)(E_fd - x_f)
    A[3, 0] = -ep.K_a * k.K5 / ep.T_a
    A[3, 2] = -ep.K_a * k.K6 / ep.T_a
    A[3, 3] = (-1.0 - ep.K_a * kf_tf) / ep.T_a
    A[3, 4] = ep.K_a * kf_tf / ep.T_a

    A[4, 3] = 1.0 / ep.T_f
    A[4, 4] = -1.0 / ep.T_f

    B_tm = np.zeros(5)
    B_tm[1] = 1.0 / gp.M
    B_u = np.zeros(5)
    B_u[3] = ep.K_a / ep.T_a
    C_omega = np.zeros(5)
    C_omega[1] = 1.0
    C_delta = np.zeros(5)
    C_delta[0] = 1.0

    return StateSpace(A=A, B_tm=B_tm, B_u=B_u, C_omega=C_omega, C_delta=C_delta)


def build_plant(plant: PlantParams, op: OperatingPoint = None) -> PlantModel:
    """从参数集一步得到初值、K 常数和状态空间"""
    op = op or plant.operating_point
    ic = compute_initial_conditions(plant.generator, plant.network, op)
    k = compute_k_constants(plant.generator, plant.network, ic)
    ss = build_state_space(k, plant.generator, plant.exciter)
    return PlantModel(ic=ic, k=k, ss=ss)


def _system_matrix(ss: Union[StateSpace, np.ndarray]) -> np.ndarray:
    A = ss.A if isinstance(ss, StateSpace) else np.asarray(ss, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A 必须为方阵: {A.shape}")
    return A


def eigenvalues(ss: Union[StateSpace, np.ndarray]) -> np.ndarray:
    """全部特征值，按实部降序（实部相同按虚部降序）"""
    A = _system_matrix(ss)
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"特征值计算不收敛: {e}")
    order = np.lexsort((-eigs.imag, -eigs.real))
    return eigs[order]


def mode_table(eigs: np.ndarray) -> list:
    """每个特征值的频率 (Hz) 与阻尼比"""
    rows = []
    for lam in eigs:
        mag = abs(lam)
        zeta = -lam.real / mag if mag > 0 else 1.0
        rows.append({'eigenvalue': complex(lam),
                     'freq_hz': abs(lam.imag) / (2 * np.pi),
                     'damping_ratio': float(zeta)})
    return rows


def participation_factors(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """参与因子矩阵 P[k, i]：状态 k 对模式 i 的参与程度（每列归一化）"""
    try:
        lam, right = np.linalg.eig(A)
        left = np.linalg.inv(right)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"特征向量计算失败: {e}")
    p = np.abs(right * left.T)
    p = p / p.sum(axis=0, keepdims=True)
    return lam, p


def electromechanical_mode(ss: StateSpace) -> complex:
    """机电振荡模式：虚部为正且 Δδ/Δω 参与最大的特征值"""
    lam, p = participation_factors(ss.A)
    oscillatory = np.where(lam.imag > 1e-9)[0]
    if oscillatory.size == 0:
        raise ConvergenceFailure("系统没有振荡模式")
    mech = p[0, oscillatory] + p[1, oscillatory]
    return complex(lam[oscillatory[np.argmax(mech)]])
