"""
定步长闭环仿真与阻尼指标

对象 + 稳定器的合并状态用经典四阶龙格-库塔积分；机械转矩在 t=0 阶跃。
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from utils.math_utils import (envelope_peaks, integral_of_square, last_exit_index,
                              log_linear_slope, rk4_propagator, rk4_step)
from .controllers import CpssParams, LinearBlock, cpss_build
from .errors import Diverged, FitFailed, InvalidParams
from .fuzzy_pss import FlcConfig, flc_output
from .plant_params import OperatingPoint
from .smib_model import StateSpace

logger = logging.getLogger(__name__)

CONTROLLER_CHOICES = ('none', 'cpss', 'flpss')
DIVERGENCE_LIMIT = 1e6
DIVERGENCE_PENALTY = 1e6
SETTLING_BAND = 0.02
PEAK_FLOOR = 0.01

Controller = Union[None, LinearBlock, CpssParams, FlcConfig]


@dataclass(frozen=True)
class Scenario:
    """一次仿真任务：运行点 + 扰动 + 控制器 + 时长"""

    name: str = 'nominal'
    P: float = 1.0
    Q: float = 0.015
    V_t: float = 1.05
    step: float = 0.01
    controller: str = 'none'
    T_sim: float = 10.0
    dt: float = 0.001

    def __post_init__(self):
        if self.T_sim <= 0:
            raise InvalidParams(f"T_sim 必须为正: {self.T_sim}")
        if not 0 < self.dt <= 0.01:
            raise InvalidParams(f"dt 必须在 (0, 0.01] 内: {self.dt}")
        if not math.isfinite(self.step):
            raise InvalidParams(f"扰动必须为有限值: {self.step}")
        if self.controller not in CONTROLLER_CHOICES:
            raise InvalidParams(f"未知控制器 {self.controller!r}，可选 {CONTROLLER_CHOICES}")

    @property
    def operating_point(self) -> OperatingPoint:
        return OperatingPoint(P_e0=self.P, Q_e0=self.Q, V_t0=self.V_t)

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.T_sim / self.dt + 1e-9)) + 1

    def with_controller(self, controller: str) -> 'Scenario':
        return replace(self, controller=controller)


@dataclass(frozen=True)
class Trajectory:
    """均匀采样的仿真结果"""

    t: np.ndarray
    delta_omega: np.ndarray
    delta_delta: np.ndarray
    u_pss: np.ndarray
    T_sim: float
    dt: float
    diverged: bool = False
    divergence_time: Optional[float] = None

    def __len__(self):
        return len(self.t)

    def scaled(self, factor: float) -> 'Trajectory':
        """状态和控制量同乘一个系数（线性系统的扰动缩放）"""
        return replace(self, delta_omega=self.delta_omega * factor,
                       delta_delta=self.delta_delta * factor, u_pss=self.u_pss * factor)


@dataclass(frozen=True)
class Metrics:
    ise: float
    settling_time: float
    overshoot: float
    damping_tau: Optional[float]
    stable: bool
    settled: bool

    def summary(self) -> str:
        tau = f"{self.damping_tau:.6g}" if self.damping_tau is not None else "n/a"
        return (f"ise={self.ise:.17g} settling_time={self.settling_time:.6g} "
                f"overshoot={self.overshoot:.6g} damping_tau={tau} stable={self.stable}")


def _resolve_controller(controller: Controller, sc: Scenario):
    if sc.controller == 'none':
        if controller is not None:
            raise InvalidParams("场景未选择控制器，但传入了控制器")
        return None
    if sc.controller == 'cpss':
        if isinstance(controller, CpssParams):
            return cpss_build(controller)
        if isinstance(controller, LinearBlock):
            return controller
    if sc.controller == 'flpss' and isinstance(controller, FlcConfig):
        return controller
    raise InvalidParams(f"控制器类型 {type(controller).__name__} 与场景选择 {sc.controller!r} 不符")


def simulate(ss: StateSpace, controller: Controller, sc: Scenario,
             raise_on_divergence: bool = False) -> Trajectory:
    """阶跃扰动下的闭环仿真，所有状态从 0 开始"""
    ctrl = _resolve_controller(controller, sc)
    n_samples = sc.n_samples
    h = sc.dt
    d_tm = sc.step
    n_p = ss.n

    t = np.arange(n_samples) * h
    dw = np.zeros(n_samples)
    dd = np.zeros(n_samples)
    u = np.zeros(n_samples)

    if isinstance(ctrl, LinearBlock):
        # 线性 PSS 与对象合并积分，限幅在导数函数中起作用
        n_c = ctrl.n_states
        x = np.zeros(n_p + n_c)
        tm_term = ss.B_tm * d_tm

        def f(z):
            xp, xc = z[:n_p], z[n_p:]
            w = ss.C_omega @ xp
            v = ctrl.output(xc, w)
            return np.concatenate([ss.A @ xp + tm_term + ss.B_u * v, ctrl.derivative(xc, w)])

        def advance(z, k):
            u[k] = ctrl.output(z[n_p:], ss.C_omega @ z[:n_p])
            return rk4_step(f, z, h)
    else:
        # 无控制器或无记忆的模糊控制器：步内输入恒定，对象线性，直接用 RK4 传递矩阵
        x = np.zeros(n_p)
        P, G = rk4_propagator(ss.A, h)
        tm_inc = G @ (ss.B_tm * d_tm)
        u_inc = G @ ss.B_u

        def advance(z, k):
            if ctrl is not None:
                u[k] = flc_output(ctrl, ss.C_omega @ z, ss.omega_dot(z, d_tm))
            return P @ z + tm_inc + u_inc * u[k]

    last = n_samples - 1
    diverged = False
    divergence_time = None
    for k in range(n_samples):
        dw[k] = ss.C_omega @ x[:n_p]
        dd[k] = ss.C_delta @ x[:n_p]
        if k == last:
            if isinstance(ctrl, LinearBlock):
                u[k] = ctrl.output(x[n_p:], dw[k])
            elif ctrl is not None:
                u[k] = flc_output(ctrl, dw[k], ss.omega_dot(x[:n_p], d_tm))
            break
        x = advance(x, k)
        if not np.all(np.abs(x) <= DIVERGENCE_LIMIT):
            diverged = True
            divergence_time = float(t[k + 1])
            last = k
            break

    tr = Trajectory(t=t[:last + 1], delta_omega=dw[:last + 1], delta_delta=dd[:last + 1],
                    u_pss=u[:last + 1], T_sim=sc.T_sim, dt=h,
                    diverged=diverged, divergence_time=divergence_time)
    if diverged:
        logger.warning(f"场景 {sc.name} ({sc.controller}) 在 t={divergence_time:.4f}s 发散")
        if raise_on_divergence:
            raise Diverged(f"仿真在 t={divergence_time:.4f}s 发散", trajectory=tr)
    return tr


def fit_damping_tau(tr: Trajectory) -> float:
    """|Δω| 逐个峰值取对数做最小二乘直线拟合，tau = -1/斜率"""
    if len(tr) == 0 or not np.any(tr.delta_omega):
        raise FitFailed("轨迹为零")
    peaks = envelope_peaks(tr.delta_omega, PEAK_FLOOR)
    if peaks.size < 3:
        raise FitFailed(f"峰值不足 3 个: {peaks.size}")
    slope = log_linear_slope(tr.t[peaks], np.abs(tr.delta_omega[peaks]))
    if slope >= 0:
        raise FitFailed(f"包络不衰减 (斜率 {slope:.4g})")
    return -1.0 / slope


def ise_objective(tr: Trajectory) -> float:
    """∫Δω² dt；发散时返回罚值，越早发散罚得越重"""
    if len(tr) == 0:
        raise InvalidParams("轨迹为空")
    if tr.diverged:
        return DIVERGENCE_PENALTY * (2.0 - tr.divergence_time / tr.T_sim)
    return integral_of_square(tr.delta_omega, tr.t)


def compute_metrics(tr: Trajectory) -> Metrics:
    if len(tr) == 0:
        raise InvalidParams("轨迹为空")
    peak = float(np.max(np.abs(tr.delta_omega)))

    # 调节时间：最后一次离开 ±2% 峰值带之后的第一个采样点
    exit_idx = last_exit_index(tr.delta_omega, SETTLING_BAND * peak)
    if exit_idx is None:
        settling_time, settled = 0.0, True
    elif exit_idx == len(tr) - 1:
        settling_time, settled = tr.T_sim, False
    else:
        settling_time, settled = float(tr.t[exit_idx + 1]), True

    try:
        tau = fit_damping_tau(tr)
    except FitFailed as e:
        logger.debug(f"阻尼时间常数不可用: {e}")
        tau = None

    return Metrics(ise=ise_objective(tr), settling_time=settling_time, overshoot=peak,
                   damping_tau=tau, stable=settled and not tr.diverged, settled=settled)
