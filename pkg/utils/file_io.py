"""
文件输入输出工具
"""
import io
import logging
import re
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import yaml

from core.controllers import CpssParams
from core.errors import ConfigError, InvalidParams
from core.fuzzy_pss import FlcConfig
from core.ga_tuner import GaRun, MODES
from core.sim_engine import Metrics, Trajectory

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = 't,delta_omega,delta_delta,u_pss'
METRICS_HEADER = 'scenario,controller,ise,settling_time,overshoot,damping_tau,stable,trajectory'
_DIVERGED_RE = re.compile(r'#\s*diverged at t=([0-9eE.+-]+)\s+t_sim=([0-9eE.+-]+)')


def _prepare(filepath) -> Path:
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    return filepath


def save_trajectory_csv(tr: Trajectory, filepath) -> Path:
    """保存轨迹，数值保留完整双精度；发散时首行为注释"""
    filepath = _prepare(filepath)
    data = np.column_stack([tr.t, tr.delta_omega, tr.delta_delta, tr.u_pss])
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        if tr.diverged:
            f.write(f"# diverged at t={tr.divergence_time!r} t_sim={tr.T_sim!r}\n")
        np.savetxt(f, data, fmt='%.17g', delimiter=',', header=TRAJECTORY_HEADER, comments='')
    logger.debug(f"轨迹已保存: {filepath}")
    return filepath


def load_trajectory_csv(filepath) -> Trajectory:
    """读取 save_trajectory_csv 写出的文件"""
    filepath = Path(filepath)
    if not filepath.exists():
        raise ConfigError(f"轨迹文件不存在: {filepath}", path=str(filepath))

    diverged, t_div, t_sim = False, None, None
    body = []
    for line in filepath.read_text(encoding='utf-8').splitlines():
        if line.startswith('#'):
            match = _DIVERGED_RE.match(line)
            if match:
                diverged, t_div, t_sim = True, float(match.group(1)), float(match.group(2))
            continue
        body.append(line)

    if not body or body[0].strip() != TRAJECTORY_HEADER:
        raise ConfigError(f"缺少表头 {TRAJECTORY_HEADER}", path=str(filepath))
    data = np.loadtxt(io.StringIO('\n'.join(body[1:])), delimiter=',', ndmin=2)
    if data.shape[1] != 4:
        raise ConfigError(f"轨迹文件列数错误: {data.shape[1]}", path=str(filepath))

    t = data[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return Trajectory(t=t, delta_omega=data[:, 1], delta_delta=data[:, 2], u_pss=data[:, 3],
                      T_sim=t_sim if t_sim is not None else float(t[-1]), dt=dt,
                      diverged=diverged, divergence_time=t_div)


def save_ga_log_csv(run: GaRun, filepath) -> Path:
    """每代一行：generation,best_fitness,mean_fitness,<参数...>"""
    filepath = _prepare(filepath)
    header = ','.join(['generation', 'best_fitness', 'mean_fitness'] + run.param_names)
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        f.write(header + '\n')
        for rec in run.records:
            values = [repr(float(v)) for v in (rec.best_fitness, rec.mean_fitness) + rec.best_params]
            f.write(f"{rec.generation}," + ','.join(values) + '\n')
    logger.debug(f"遗传算法日志已保存: {filepath}")
    return filepath


def save_fragment(fragment: dict, filepath) -> Path:
    """整定结果片段，格式与 config.yaml 的 cpss / flc 节相同"""
    filepath = _prepare(filepath)
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        yaml.safe_dump(fragment, f, sort_keys=False, allow_unicode=True)
    return filepath


def load_fragment(filepath, mode: str) -> Union[CpssParams, FlcConfig]:
    """读取 tune 写出的片段，返回控制器配置"""
    filepath = Path(filepath)
    if mode not in MODES:
        raise InvalidParams(f"未知整定模式 {mode!r}，可选 {MODES}")
    if not filepath.exists():
        raise ConfigError(f"找不到整定结果 {filepath}，请先运行: tune --mode {mode}",
                          path=str(filepath))
    try:
        data = yaml.safe_load(filepath.read_text(encoding='utf-8')) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigError(f"整定结果格式错误: {e}", path=str(filepath),
                          line=mark.line + 1 if mark is not None else None)

    if data.get('mode') != mode:
        raise ConfigError(f"片段模式为 {data.get('mode')!r}，需要 {mode!r}", path=str(filepath))
    try:
        if mode == 'ga-cpss':
            return CpssParams.from_dict(data['cpss'])
        return FlcConfig.from_dict(data['flc'])
    except (KeyError, InvalidParams) as e:
        raise ConfigError(f"整定结果不完整: {e}", path=str(filepath))


def save_metrics_csv(rows: Sequence[Dict], filepath) -> Path:
    """rows: 每行包含 scenario, controller, metrics, trajectory"""
    filepath = _prepare(filepath)
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        f.write(METRICS_HEADER + '\n')
        for row in rows:
            m: Metrics = row['metrics']
            tau = repr(m.damping_tau) if m.damping_tau is not None else ''
            f.write(f"{row['scenario']},{row['controller']},{m.ise!r},{m.settling_time!r},"
                    f"{m.overshoot!r},{tau},{int(m.stable)},{row['trajectory']}\n")
    return filepath


def save_text(lines: List[str], filepath) -> Path:
    filepath = _prepare(filepath)
    with open(filepath, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(lines) + '\n')
    return filepath
