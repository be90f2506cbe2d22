"""
二进制编码遗传算法，用于整定稳定器参数

流程：评估 -> 选择 -> 交叉 -> 变异，带精英保留；适应度 = 标准值 C - Σ ISE。
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import rankdata

from .controllers import CpssParams
from .errors import DegenerateFitness, InvalidParams, LengthMismatch, PssLabError
from .fuzzy_pss import FlcConfig, scaled_partition
from .plant_params import PlantParams
from .sim_engine import DIVERGENCE_PENALTY, Scenario, ise_objective, simulate
from .smib_model import StateSpace, build_plant

logger = logging.getLogger(__name__)

SELECTION_METHODS = ('ratioing', 'ranking')
MODES = ('ga-cpss', 'ga-flpss')
MODE_CONTROLLER = {'ga-cpss': 'cpss', 'ga-flpss': 'flpss'}

REASON_GENERATIONS = "Fixed number of generation"
REASON_CONVERGED = "All individuals converged to the same string"
REASON_TARGET = "Minimum criteria satisfied"
REASON_STALLED = "No improvement in fitness"


@dataclass(frozen=True)
class GeneSpec:
    """一个基因：取值区间和位数"""

    name: str
    lower: float
    upper: float
    bits: int = 6

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidParams(f"基因 {self.name} 需要 lower < upper: [{self.lower}, {self.upper}]")
        if self.bits < 1:
            raise InvalidParams(f"基因 {self.name} 位数至少为 1: {self.bits}")

    @property
    def levels(self) -> int:
        return 2 ** self.bits - 1


@dataclass(frozen=True)
class GaConfig:
    """遗传算法参数"""

    population: int = 20
    pc: float = 0.8
    pm: float = 0.001
    selection: str = 'ratioing'
    elitism: int = 1
    generations: int = 50
    window: int = 15
    seed: int = 0
    mode: str = 'ga-flpss'
    target: Optional[float] = None
    workers: int = 1
    dt: float = 0.005

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise InvalidParams(f"种群规模必须为不小于 2 的偶数: {self.population}")
        for name in ('pc', 'pm'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParams(f"{name} 必须在 [0, 1] 内: {value}")
        if self.selection not in SELECTION_METHODS:
            raise InvalidParams(f"未知选择方法 {self.selection!r}，可选 {SELECTION_METHODS}")
        if not 0 <= self.elitism < self.population:
            raise InvalidParams(f"精英数必须在 [0, population) 内: {self.elitism}")
        if self.generations < 1 or self.window < 1:
            raise InvalidParams(f"generations 和 window 至少为 1: {self.generations}, {self.window}")
        if self.mode not in MODES:
            raise InvalidParams(f"未知整定模式 {self.mode!r}，可选 {MODES}")
        if self.workers < 1:
            raise InvalidParams(f"workers 至少为 1: {self.workers}")
        if not 0 < self.dt <= 0.01:
            raise InvalidParams(f"dt 必须在 (0, 0.01] 内: {self.dt}")

    def to_dict(self) -> dict:
        return {'population': self.population, 'pc': self.pc, 'pm': self.pm,
                'selection': self.selection, 'elitism': self.elitism,
                'generations': self.generations, 'window': self.window, 'seed': self.seed,
                'mode': self.mode, 'target': self.target, 'workers': self.workers, 'dt': self.dt}

    @classmethod
    def from_dict(cls, data: dict) -> 'GaConfig':
        casts = {'population': int, 'pc': float, 'pm': float, 'selection': str, 'elitism': int,
                 'generations': int, 'window': int, 'seed': int, 'mode': str,
                 'target': float, 'workers': int, 'dt': float}
        unknown = sorted(set(data) - set(casts))
        if unknown:
            raise InvalidParams(f"ga 中未知的键: {', '.join(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if value is None and key == 'target':
                continue
            try:
                kwargs[key] = casts[key](value)
            except (TypeError, ValueError):
                raise InvalidParams(f"ga.{key} 取值无效: {value!r}")
        return cls(**kwargs)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_params: Tuple[float, ...]
    best_bits: str


@dataclass
class GaRun:
    """一次完整的遗传算法运行记录"""

    specs: Tuple[GeneSpec, ...]
    records: List[GenerationRecord] = field(default_factory=list)
    reason: str = ''
    best_fitness: float = -np.inf
    best_chromosome: Optional[np.ndarray] = None
    evaluations: int = 0

    @property
    def best_params(self) -> Dict[str, float]:
        values = decode(self.best_chromosome, self.specs)
        return {s.name: float(v) for s, v in zip(self.specs, values)}

    @property
    def param_names(self) -> List[str]:
        return [s.name for s in self.specs]


def chromosome_length(specs: Sequence[GeneSpec]) -> int:
    return sum(s.bits for s in specs)


def bits_to_str(c: np.ndarray) -> str:
    return ''.join('1' if b else '0' for b in c)


def decode(c: np.ndarray, specs: Sequence[GeneSpec]) -> np.ndarray:
    """每个基因按无符号整数线性映射到 [lower, upper]，高位在前"""
    c = np.asarray(c)
    if c.ndim != 1 or len(c) != chromosome_length(specs):
        raise LengthMismatch(f"染色体长度 {c.size} 与基因总位数 {chromosome_length(specs)} 不符")

    values = np.empty(len(specs))
    pos = 0
    for i, s in enumerate(specs):
        gene = c[pos:pos + s.bits].astype(np.int64)
        v = int(gene @ (1 << np.arange(s.bits - 1, -1, -1, dtype=np.int64)))
        frac = v / s.levels
        values[i] = s.lower * (1.0 - frac) + s.upper * frac
        pos += s.bits
    return values


def evaluate(c: np.ndarray, specs: Sequence[GeneSpec],
             problem: Callable[[np.ndarray], float]) -> float:
    return float(problem(decode(c, specs)))


def selection_probabilities(fitness: np.ndarray, method: str) -> np.ndarray:
    fitness = np.asarray(fitness, dtype=float)
    if method == 'ratioing':
        shifted = fitness - np.min(fitness)
        total = np.sum(shifted)
        if total <= 0.0:
            raise DegenerateFitness("平移后适应度全为 0")
        return shifted / total
    if method == 'ranking':
        ranks = rankdata(fitness, method='average')
        return ranks / np.sum(ranks)
    raise InvalidParams(f"未知选择方法 {method!r}")


def select(fitness: Sequence[float], method: str, rng: np.random.RandomState) -> np.ndarray:
    """轮盘赌选出 n/2 对父代，返回下标数组 (n/2, 2)"""
    n = len(fitness)
    if n == 0:
        raise InvalidParams("种群为空")
    try:
        p = selection_probabilities(fitness, method)
    except DegenerateFitness as e:
        logger.warning(f"{e}，改用均匀选择")
        p = np.full(n, 1.0 / n)
    return rng.choice(n, size=(max(n // 2, 1), 2), p=p)


def crossover(a: np.ndarray, b: np.ndarray, pc: float, rng: np.random.RandomState,
              cut: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """单点交叉；给定 cut 时直接在该处交叉"""
    if len(a) != len(b):
        raise LengthMismatch(f"父代长度不一致: {len(a)} != {len(b)}")
    n = len(a)
    if cut is None:
        if rng.rand() >= pc or n < 2:
            return a.copy(), b.copy()
        cut = rng.randint(1, n)
    elif not 1 <= cut <= n - 1:
        raise InvalidParams(f"交叉点必须在 [1, {n - 1}] 内: {cut}")
    return (np.concatenate([a[:cut], b[cut:]]),
            np.concatenate([b[:cut], a[cut:]]))


def mutate(c: np.ndarray, pm: float, rng: np.random.RandomState) -> np.ndarray:
    """逐位独立以概率 pm 翻转"""
    flips = rng.rand(len(c)) < pm
    return np.where(flips, 1 - c, c).astype(c.dtype)


def _evaluate_population(pop: np.ndarray, specs: Sequence[GeneSpec], problem: Callable,
                         cache: Dict[bytes, float], workers: int) -> np.ndarray:
    keys = [row.tobytes() for row in pop]
    pending = {}
    for key, row in zip(keys, pop):
        if key not in cache and key not in pending:
            pending[key] = row

    if pending:
        rows = list(pending.values())
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda r: evaluate(r, specs, problem), rows))
        else:
            results = [evaluate(r, specs, problem) for r in rows]
        cache.update(zip(pending.keys(), results))

    return np.array([cache[k] for k in keys])


def run_ga(cfg: GaConfig, specs: Sequence[GeneSpec],
           problem: Callable[[np.ndarray], float],
           progress: Callable[[GenerationRecord], None] = None) -> GaRun:
    """
    运行遗传算法直到满足任一终止条件：
    代数上限、种群收敛、达到目标适应度、连续 window 代无改进
    """
    specs = tuple(specs)
    rng = np.random.RandomState(cfg.seed)
    length = chromosome_length(specs)
    n = cfg.population

    pop = rng.randint(0, 2, size=(n, length)).astype(np.uint8)
    cache: Dict[bytes, float] = {}
    run = GaRun(specs=specs)
    last_improvement = 0

    logger.info(f"开始遗传算法: 种群 {n}, 染色体 {length} 位, 最多 {cfg.generations} 代")
    for gen in range(cfg.generations):
        fitness = _evaluate_population(pop, specs, problem, cache, cfg.workers)
        best = int(np.argmax(fitness))

        if fitness[best] > run.best_fitness:
            run.best_fitness = float(fitness[best])
            run.best_chromosome = pop[best].copy()
            last_improvement = gen

        record = GenerationRecord(
            generation=gen,
            best_fitness=float(fitness[best]),
            mean_fitness=float(np.mean(fitness)),
            best_params=tuple(float(v) for v in decode(pop[best], specs)),
            best_bits=bits_to_str(pop[best]),
        )
        run.records.append(record)
        logger.debug(f"第 {gen} 代: 最优 {record.best_fitness:.6g}, 平均 {record.mean_fitness:.6g}")
        if progress:
            progress(record)

        if cfg.target is not None and run.best_fitness >= cfg.target:
            run.reason = REASON_TARGET
        elif np.all(pop == pop[0]):
            run.reason = REASON_CONVERGED
        elif gen - last_improvement >= cfg.window:
            run.reason = REASON_STALLED
        elif gen == cfg.generations - 1:
            run.reason = REASON_GENERATIONS
        if run.reason:
            break

        elite = np.argsort(-fitness, kind='stable')[:cfg.elitism]
        children = []
        for i, j in select(fitness, cfg.selection, rng):
            for child in crossover(pop[i], pop[j], cfg.pc, rng):
                children.append(mutate(child, cfg.pm, rng))
        pop = np.vstack([pop[elite]] + children[:n - cfg.elitism]).astype(np.uint8)

    run.evaluations = len(cache)
    logger.info(f"遗传算法结束: {run.reason}, {len(run.records)} 代, "
                f"{run.evaluations} 次评估, 最优适应度 {run.best_fitness:.6g}")
    return run


def standard_value(no_pss_ise: float) -> float:
    """适应度标准值 C，保证不劣于无 PSS 的控制器适应度为正"""
    return max(1.5 * no_pss_ise, 1.0)


def cpss_gene_specs(bits: int = 6) -> Tuple[GeneSpec, ...]:
    return (GeneSpec('kstab', 0.1, 50.0, bits),
            GeneSpec('t1', 0.01, 1.0, bits))


def flc_gene_specs(bits: int = 6) -> Tuple[GeneSpec, ...]:
    """三个比例因子 + 三个划分的半底宽"""
    return (GeneSpec('ke', 500.0, 800.0, bits),
            GeneSpec('kde', 45.0, 60.0, bits),
            GeneSpec('ku', 0.08, 0.1, bits),
            GeneSpec('we', 0.25, 1.0 / 3.0, bits),
            GeneSpec('wde', 0.25, 1.0 / 3.0, bits),
            GeneSpec('wu', 0.25, 1.0 / 3.0, bits))


def gene_specs_for(mode: str, bits: int = 6) -> Tuple[GeneSpec, ...]:
    if mode == 'ga-cpss':
        return cpss_gene_specs(bits)
    if mode == 'ga-flpss':
        return flc_gene_specs(bits)
    raise InvalidParams(f"未知整定模式 {mode!r}，可选 {MODES}")


def apply_params(mode: str, params: Dict[str, float],
                 base: Union[CpssParams, FlcConfig, None] = None) -> Union[CpssParams, FlcConfig]:
    """把解码后的参数写入控制器配置，其余字段沿用 base"""
    names = [s.name for s in gene_specs_for(mode)]
    missing = [k for k in names if k not in params]
    if missing:
        raise InvalidParams(f"缺少参数: {', '.join(missing)}")

    if mode == 'ga-cpss':
        if base is None:
            return CpssParams(K_stab=params['kstab'], T1=params['t1'])
        return replace(base, K_stab=params['kstab'], T1=params['t1'])

    base = base if base is not None else FlcConfig()
    return replace(base,
                   Ke=params['ke'], Kde=params['kde'], Ku=params['ku'],
                   partition_e=scaled_partition(base.partition_e, params['we']),
                   partition_de=scaled_partition(base.partition_de, params['wde']),
                   partition_u=scaled_partition(base.partition_u, params['wu']))


class TuningProblem:
    """
    遗传算法的适应度函数：对解码后的参数向量构造控制器，
    在所有场景上仿真并返回 C - Σ ISE
    """

    def __init__(self, plant: PlantParams, scenarios: Sequence[Scenario], mode: str,
                 specs: Sequence[GeneSpec] = None, base=None, dt: float = None,
                 standard: float = None):
        if not scenarios:
            raise InvalidParams("至少需要一个场景")
        if mode not in MODES:
            raise InvalidParams(f"未知整定模式 {mode!r}，可选 {MODES}")
        self.mode = mode
        self.specs = tuple(specs) if specs is not None else gene_specs_for(mode)
        self.base = base

        controller = MODE_CONTROLLER[mode]
        self.scenarios = tuple(replace(sc, controller=controller, dt=dt or sc.dt)
                               for sc in scenarios)
        self.models: Dict[str, StateSpace] = {
            sc.name: build_plant(plant, sc.operating_point).ss for sc in self.scenarios}

        self.no_pss_ise = sum(
            ise_objective(simulate(self.models[sc.name], None, sc.with_controller('none')))
            for sc in self.scenarios)
        self.standard = standard if standard is not None else standard_value(self.no_pss_ise)
        logger.info(f"整定问题: 模式 {mode}, {len(self.scenarios)} 个场景, "
                    f"无 PSS ISE={self.no_pss_ise:.6g}, C={self.standard:.6g}")

    def params_dict(self, values: Sequence[float]) -> Dict[str, float]:
        if len(values) != len(self.specs):
            raise LengthMismatch(f"参数个数 {len(values)} 与基因数 {len(self.specs)} 不符")
        return {s.name: float(v) for s, v in zip(self.specs, values)}

    def controller(self, values: Sequence[float]) -> Union[CpssParams, FlcConfig]:
        return apply_params(self.mode, self.params_dict(values), self.base)

    def total_ise(self, values: Sequence[float]) -> float:
        ctrl = self.controller(values)
        return sum(ise_objective(simulate(self.models[sc.name], ctrl, sc))
                   for sc in self.scenarios)

    def __call__(self, values: Sequence[float]) -> float:
        try:
            return self.standard - self.total_ise(values)
        except PssLabError as e:
            logger.warning(f"参数 {list(values)} 评估失败，按发散处理: {e}")
            return self.standard - 2.0 * DIVERGENCE_PENALTY * len(self.scenarios)


def tuned_fragment(run: GaRun, mode: str, controller: Union[CpssParams, FlcConfig],
                   seed: int = None) -> dict:
    """可直接写回配置文件的整定结果片段"""
    section = 'cpss' if mode == 'ga-cpss' else 'flc'
    fragment = {
        'mode': mode,
        section: controller.to_dict(),
        'tuning': {
            'best_fitness': run.best_fitness,
            'reason': run.reason,
            'generations': len(run.records),
            'params': run.best_params,
        },
    }
    if seed is not None:
        fragment['tuning']['seed'] = seed
    return fragment
