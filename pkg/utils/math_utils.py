"""
数学工具函数
"""
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """经典四阶龙格-库塔一步"""
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagator(A: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    常输入线性系统 dx/dt = A x + b 的 RK4 一步可写成 x+ = P x + G b，
    P、G 只依赖 A 和 h
    """
    ha = h * np.asarray(A, dtype=float)
    eye = np.eye(ha.shape[0])
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    P = eye + ha + ha2 / 2.0 + ha3 / 6.0 + ha3 @ ha / 24.0
    G = h * (eye + ha / 2.0 + ha2 / 6.0 + ha3 / 24.0)
    return P, G


def integral_of_square(y: np.ndarray, t: np.ndarray) -> float:
    """梯形公式计算 ∫y² dt"""
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        return 0.0
    return float(trapezoid(y ** 2, t))


def envelope_peaks(y: np.ndarray, floor: float = 0.01) -> np.ndarray:
    """|y| 的局部极大值下标，只保留不低于 floor × 全局峰值的点"""
    mag = np.abs(np.asarray(y, dtype=float))
    if mag.size == 0:
        return np.array([], dtype=int)
    peaks, _ = find_peaks(mag)
    return peaks[mag[peaks] >= floor * np.max(mag)]


def log_linear_slope(t: np.ndarray, y: np.ndarray) -> float:
    """对 ln(y) 做最小二乘直线拟合，返回斜率"""
    slope, _ = np.polyfit(np.asarray(t, dtype=float), np.log(y), 1)
    return float(slope)


def last_exit_index(y: np.ndarray, band: float) -> Optional[int]:
    """|y| 最后一次超出 band 的下标，从未超出时返回 None"""
    outside = np.nonzero(np.abs(y) > band)[0]
    return int(outside[-1]) if outside.size else None


def relative_spread(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|)，两者都为 0 时为 0"""
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0
