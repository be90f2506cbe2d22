"""
工具模块

file_io 和 config 依赖 core，需按子模块导入。
"""
from .math_utils import (
    rk4_step, rk4_propagator,
    integral_of_square, envelope_peaks,
    log_linear_slope, last_exit_index,
    relative_spread
)

__all__ = [
    'rk4_step', 'rk4_propagator',
    'integral_of_square', 'envelope_peaks',
    'log_linear_slope', 'last_exit_index',
    'relative_spread'
]
