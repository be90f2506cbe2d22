"""
配置文件读取

config.yaml 分为 plant / simulation / scenarios / cpss / flc / ga / compare 几节，
任何一节都可以省略。出错时抛出带文件名和行号的 ConfigError。
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import yaml

from core.controllers import CpssParams, cpss_phase_compensation
from core.errors import ConfigError, InvalidParams
from core.fuzzy_pss import FlcConfig
from core.ga_tuner import GaConfig, MODES
from core.plant_params import PlantParams
from core.sim_engine import Scenario
from core.smib_model import build_plant
from presets.preset_manager import PresetManager

logger = logging.getLogger(__name__)

SECTIONS = ('plant', 'simulation', 'scenarios', 'cpss', 'flc', 'ga', 'compare')
ROSTER_CHOICES = ('none', 'cpss', 'flpss') + MODES
DEFAULT_ROSTER = ('none', 'cpss', 'ga-flpss')

# 三种负荷工况
DEFAULT_SCENARIOS = {
    'light': {'P': 0.4, 'Q': 0.5, 'Vt': 1.05, 'step': 0.1},
    'nominal': {'P': 1.0, 'Q': 0.015, 'Vt': 1.05, 'step': 0.01},
    'heavy': {'P': 1.25, 'Q': 0.25, 'Vt': 1.05, 'step': 0.01},
}


def _node_lines(node, prefix=()) -> Dict[tuple, int]:
    """键路径 -> 行号（从 1 开始）"""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = prefix + (key_node.value,)
            lines[key] = key_node.start_mark.line + 1
            lines.update(_node_lines(value_node, key))
    return lines


class _Source:
    """解析后的 YAML 数据及其行号信息"""

    def __init__(self, data: dict, lines: Dict[tuple, int], path: Optional[Path]):
        self.data = data
        self.lines = lines
        self.path = path

    def error(self, message: str, *keys) -> ConfigError:
        # 取最具体的已知行号
        line = None
        for i in range(len(keys), 0, -1):
            line = self.lines.get(tuple(str(k) for k in keys[:i]))
            if line is not None:
                break
        return ConfigError(message, path=str(self.path) if self.path else None, line=line)

    def section(self, name: str) -> dict:
        value = self.data.get(name)
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise self.error(f"{name} 必须是映射", name)
        return value


def read_yaml(path) -> _Source:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"配置文件不存在: {path}", path=str(path))
    text = path.read_text(encoding='utf-8')
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML 语法错误: {getattr(e, 'problem', e)}", path=str(path), line=line)

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("配置文件顶层必须是映射", path=str(path), line=1)
    return _Source(data, _node_lines(node), path)


@dataclass
class LabConfig:
    """一次运行用到的全部配置"""

    plant: PlantParams = field(default_factory=PlantParams)
    preset: str = 'paper-smib'
    dt: float = 0.001
    t_sim: float = 10.0
    scenarios: Tuple[Scenario, ...] = ()
    cpss: dict = field(default_factory=dict)
    flc: FlcConfig = field(default_factory=FlcConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    roster: Tuple[str, ...] = DEFAULT_ROSTER
    tuned: Dict[str, str] = field(default_factory=dict)
    path: Optional[Path] = None

    def scenario(self, name: str) -> Scenario:
        for sc in self.scenarios:
            if sc.name == name:
                return sc
        names = ', '.join(sc.name for sc in self.scenarios)
        raise ConfigError(f"未知场景 {name!r}，可选: {names}",
                          path=str(self.path) if self.path else None)

    def cpss_params(self) -> CpssParams:
        """显式给出 kstab 和 t1 时直接使用，否则在额定运行点做相位补偿整定"""
        if 'kstab' in self.cpss and 't1' in self.cpss:
            return CpssParams.from_dict(self.cpss)
        model = build_plant(self.plant)
        extra = {name: float(self.cpss[key]) for key, name in
                 (('tw', 'T_w'), ('t2', 'T2'), ('umin', 'u_min'), ('umax', 'u_max'))
                 if key in self.cpss}
        return cpss_phase_compensation(model.k, self.plant.generator, self.plant.exciter, **extra)


def _parse_plant(src: _Source, presets: PresetManager) -> Tuple[PlantParams, str]:
    section = dict(src.section('plant'))
    name = str(section.pop('preset', 'paper-smib'))
    try:
        plant = presets.load_preset(name)
    except ConfigError as e:
        raise src.error(str(e), 'plant', 'preset')
    if section:
        try:
            plant = plant.with_overrides(section)
        except InvalidParams as e:
            raise src.error(str(e), 'plant', next(iter(section)))
    return plant, name


def _parse_scenarios(src: _Source, dt: float, t_sim: float) -> Tuple[Scenario, ...]:
    section = src.section('scenarios') or DEFAULT_SCENARIOS
    scenarios = []
    for name, entry in section.items():
        if not isinstance(entry, dict):
            raise src.error(f"场景 {name} 必须是映射", 'scenarios', name)
        entry = dict(entry)
        if not entry.pop('enabled', True):
            continue
        unknown = sorted(set(entry) - {'P', 'Q', 'Vt', 'step'})
        if unknown:
            raise src.error(f"场景 {name} 中未知的键: {', '.join(unknown)}", 'scenarios', name, unknown[0])
        defaults = DEFAULT_SCENARIOS.get(name, DEFAULT_SCENARIOS['nominal'])
        try:
            scenarios.append(Scenario(
                name=str(name),
                P=float(entry.get('P', defaults['P'])),
                Q=float(entry.get('Q', defaults['Q'])),
                V_t=float(entry.get('Vt', defaults['Vt'])),
                step=float(entry.get('step', defaults['step'])),
                T_sim=t_sim, dt=dt))
        except (InvalidParams, TypeError, ValueError) as e:
            raise src.error(f"场景 {name}: {e}", 'scenarios', name)
    if not scenarios:
        raise src.error("没有启用的场景", 'scenarios')
    return tuple(scenarios)


def _parse_cpss(src: _Source) -> dict:
    section = src.section('cpss')
    known = {'kstab', 'tw', 't1', 't2', 'umin', 'umax'}
    unknown = sorted(set(section) - known)
    if unknown:
        raise src.error(f"cpss 中未知的键: {', '.join(unknown)}", 'cpss', unknown[0])
    try:
        cpss = {k: float(v) for k, v in section.items()}
        if 'kstab' in cpss and 't1' in cpss:
            CpssParams.from_dict(cpss)
    except (InvalidParams, TypeError, ValueError) as e:
        raise src.error(f"cpss: {e}", 'cpss')
    return cpss


def _parse_compare(src: _Source) -> Tuple[Tuple[str, ...], Dict[str, str]]:
    section = src.section('compare')
    unknown = sorted(set(section) - {'roster', 'tuned'})
    if unknown:
        raise src.error(f"compare 中未知的键: {', '.join(unknown)}", 'compare', unknown[0])
    roster = tuple(str(r) for r in section.get('roster', DEFAULT_ROSTER))
    bad = [r for r in roster if r not in ROSTER_CHOICES]
    if bad or len(set(roster)) != len(roster) or not roster:
        raise src.error(f"roster 取值无效: {list(roster)}，可选 {ROSTER_CHOICES}", 'compare', 'roster')
    tuned = section.get('tuned') or {}
    if not isinstance(tuned, dict) or any(k not in MODES for k in tuned):
        raise src.error(f"tuned 必须是 {MODES} 到文件路径的映射", 'compare', 'tuned')
    return roster, {k: str(v) for k, v in tuned.items()}


def load_config(path=None, presets_dir=None) -> LabConfig:
    """读取配置文件；path 为 None 时全部使用默认值"""
    src = read_yaml(path) if path is not None else _Source({}, {}, None)
    unknown = sorted(set(src.data) - set(SECTIONS))
    if unknown:
        raise src.error(f"未知的配置节: {', '.join(unknown)}", unknown[0])

    presets = PresetManager(presets_dir) if presets_dir else PresetManager()
    plant, preset = _parse_plant(src, presets)

    simulation = src.section('simulation')
    try:
        dt = float(simulation.get('dt', 0.001))
        t_sim = float(simulation.get('t_sim', 10.0))
    except (TypeError, ValueError) as e:
        raise src.error(f"simulation: {e}", 'simulation')
    scenarios = _parse_scenarios(src, dt, t_sim)

    cpss = _parse_cpss(src)
    try:
        flc = FlcConfig.from_dict(src.section('flc'))
    except (InvalidParams, TypeError, ValueError) as e:
        raise src.error(f"flc: {e}", 'flc')
    try:
        ga = GaConfig.from_dict(src.section('ga'))
    except InvalidParams as e:
        raise src.error(f"ga: {e}", 'ga')

    roster, tuned = _parse_compare(src)
    cfg = LabConfig(plant=plant, preset=preset, dt=dt, t_sim=t_sim, scenarios=scenarios,
                    cpss=cpss, flc=flc, ga=ga, roster=roster, tuned=tuned,
                    path=Path(path) if path is not None else None)
    logger.debug(f"配置已加载: 预设 {preset}, {len(scenarios)} 个场景")
    return cfg
