"""
命令行前端：kconst / simulate / tune / compare

退出码：0 成功，1 配置或参数错误，2 仿真发散或未稳定。
"""
import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from core.controllers import CpssParams, cpss_build, close_loop
from core.errors import ConfigError, Diverged, PssLabError
from core.ga_tuner import (MODES, MODE_CONTROLLER, GaRun, TuningProblem, apply_params,
                           gene_specs_for, run_ga, tuned_fragment)
from core.sim_engine import Metrics, Scenario, compute_metrics, simulate
from core.smib_model import build_plant, eigenvalues, electromechanical_mode, mode_table
from utils.config import ROSTER_CHOICES, LabConfig, load_config
from utils.file_io import (load_fragment, save_fragment, save_ga_log_csv, save_metrics_csv,
                           save_text, save_trajectory_csv)
from utils.math_utils import relative_spread

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2

K_NAMES = ('K1', 'K2', 'K3', 'K4', 'K5', 'K6')


def _load(args) -> LabConfig:
    cfg = load_config(args.config, presets_dir=getattr(args, 'presets', None))
    if getattr(args, 'seed', None) is not None:
        cfg.ga = replace(cfg.ga, seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fragment_path(cfg: LabConfig, out: Path, mode: str) -> Path:
    if mode in cfg.tuned:
        return Path(cfg.tuned[mode])
    return out / f"tuned-{mode}.yaml"


def _cpss_base(cfg: LabConfig) -> CpssParams:
    """GA-CPSS 的固定部分（T_w、T2、限幅）取自配置"""
    keys = {'tw': 'T_w', 't2': 'T2', 'umin': 'u_min', 'umax': 'u_max'}
    extra = {keys[k]: v for k, v in cfg.cpss.items() if k in keys}
    return CpssParams(K_stab=1.0, T1=extra.get('T2', 0.05), **extra)


def _resolve(cfg: LabConfig, out: Path, name: str, tune_inline: bool = False):
    """控制器名 -> (场景中的控制器类型, 控制器配置)"""
    if name == 'none':
        return 'none', None
    if name == 'cpss':
        return 'cpss', cfg.cpss_params()
    if name == 'flpss':
        return 'flpss', cfg.flc
    path = _fragment_path(cfg, out, name)
    if not path.exists() and tune_inline:
        logger.info(f"未找到 {path}，现场运行整定 ({name})")
        _tune(cfg, out, name, cfg.scenarios)
    return MODE_CONTROLLER[name], load_fragment(path, name)


# ---------------------------------------------------------------- kconst

def _kconst_rows(cfg: LabConfig, with_cpss: bool) -> List[dict]:
    rows = []
    cpss = cfg.cpss_params() if with_cpss else None
    for sc in cfg.scenarios:
        model = build_plant(cfg.plant, sc.operating_point)
        eigs = eigenvalues(model.ss)
        em = electromechanical_mode(model.ss)
        row = {'scenario': sc.name, 'ic': model.ic, 'k': model.k, 'eigs': eigs, 'em': em}
        if cpss is not None:
            row['em_cpss'] = electromechanical_mode(close_loop(model.ss, cpss_build(cpss)))
        rows.append(row)
    return rows


def _kconst_csv(rows: List[dict]) -> List[str]:
    n = len(rows[0]['eigs'])
    header = ['scenario', 'delta0', 'Eqp0', 'Vinf'] + list(K_NAMES)
    header += [f"eig{i + 1}_{part}" for i in range(n) for part in ('re', 'im')]
    header += ['em_re', 'em_im']
    if 'em_cpss' in rows[0]:
        header += ['em_cpss_re', 'em_cpss_im']

    lines = [','.join(header)]
    for row in rows:
        ic = row['ic']
        values = [ic.delta0, ic.Eqp0, ic.Vinf] + list(row['k'].as_tuple())
        for lam in row['eigs']:
            values += [lam.real, lam.imag]
        values += [row['em'].real, row['em'].imag]
        if 'em_cpss' in row:
            values += [row['em_cpss'].real, row['em_cpss'].imag]
        lines.append(','.join([row['scenario']] + [repr(float(v)) for v in values]))
    return lines


def _kconst_table(rows: List[dict]) -> List[str]:
    lines = []
    for row in rows:
        ic, k = row['ic'], row['k']
        lines.append(f"== {row['scenario']} ==")
        lines.append(f"  delta0 = {ic.delta0!r} rad, Eqp0 = {ic.Eqp0!r}, Vinf = {ic.Vinf!r}")
        for name, value in zip(K_NAMES, k.as_tuple()):
            lines.append(f"  {name} = {value!r}")
        lines.append("  特征值:")
        for mode in mode_table(row['eigs']):
            lam = mode['eigenvalue']
            lines.append(f"    {lam.real!r} {lam.imag:+.17g}j  "
                         f"f={mode['freq_hz']:.4f} Hz  zeta={mode['damping_ratio']:.4f}")
        em = row['em']
        lines.append(f"  机电模式: {em.real!r} {em.imag:+.17g}j")
        if 'em_cpss' in row:
            em = row['em_cpss']
            lines.append(f"  机电模式 (CPSS): {em.real!r} {em.imag:+.17g}j")
    return lines


def cmd_kconst(args) -> int:
    cfg = _load(args)
    rows = _kconst_rows(cfg, args.cpss)
    lines = _kconst_csv(rows) if args.csv else _kconst_table(rows)
    print('\n'.join(lines))
    if args.csv and args.out:
        save_text(lines, _out_dir(args) / 'kconst.csv')
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    sc = cfg.scenario(args.scenario)
    if args.step is not None:
        sc = replace(sc, step=args.step)

    kind, controller = _resolve(cfg, out, args.controller)
    sc = sc.with_controller(kind)
    ss = build_plant(cfg.plant, sc.operating_point).ss

    path = out / f"{sc.name}_{args.controller}.csv"
    try:
        tr = simulate(ss, controller, sc, raise_on_divergence=True)
    except Diverged as e:
        save_trajectory_csv(e.trajectory, path)
        logger.error(f"{e}，部分轨迹已写入 {path}")
        print(compute_metrics(e.trajectory).summary())
        return EXIT_DIVERGED

    save_trajectory_csv(tr, path)
    metrics = compute_metrics(tr)
    print(metrics.summary())
    return EXIT_OK if metrics.stable else EXIT_DIVERGED


# ---------------------------------------------------------------- tune

def _tune(cfg: LabConfig, out: Path, mode: str, scenarios: Sequence[Scenario],
          generations: Optional[int] = None) -> Tuple[GaRun, TuningProblem]:
    ga = replace(cfg.ga, mode=mode)
    if generations is not None:
        ga = replace(ga, generations=generations)

    base = _cpss_base(cfg) if mode == 'ga-cpss' else cfg.flc
    problem = TuningProblem(cfg.plant, scenarios, mode, base=base, dt=ga.dt)
    run = run_ga(ga, gene_specs_for(mode), problem)

    controller = apply_params(mode, run.best_params, base)
    save_ga_log_csv(run, out / f"ga_{mode}.csv")
    save_fragment(tuned_fragment(run, mode, controller, seed=ga.seed), _fragment_path(cfg, out, mode))
    return run, problem


def cmd_tune(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    mode = args.mode or cfg.ga.mode
    scenarios = cfg.scenarios
    if args.scenarios:
        scenarios = tuple(cfg.scenario(name.strip()) for name in args.scenarios.split(','))

    run, problem = _tune(cfg, out, mode, scenarios, args.generations)
    tuned_ise = problem.standard - run.best_fitness
    print(f"终止原因: {run.reason}")
    print(f"代数: {len(run.records)}, 评估次数: {run.evaluations}")
    for name, value in run.best_params.items():
        print(f"  {name} = {value!r}")
    print(f"ISE: 整定后 {tuned_ise!r}, 无 PSS {problem.no_pss_ise!r}")
    return EXIT_OK


# ---------------------------------------------------------------- compare

def _ranking(results: Dict[str, Metrics]) -> List[str]:
    """按调节时间排序，未稳定的排在最后，再按 ISE"""
    return sorted(results, key=lambda c: (not results[c].stable, results[c].settling_time,
                                          results[c].ise))


def cmd_compare(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    roster = tuple(r.strip() for r in args.roster.split(',')) if args.roster else cfg.roster
    bad = [r for r in roster if r not in ROSTER_CHOICES]
    if bad:
        raise ConfigError(f"roster 取值无效: {bad}，可选 {ROSTER_CHOICES}")

    controllers = {name: _resolve(cfg, out, name, args.tune_inline) for name in roster}

    rows = []
    report = [f"预设: {cfg.preset}", f"控制器: {', '.join(roster)}"]
    if 'cpss' in controllers:
        p = controllers['cpss'][1]
        source = '配置给定' if {'kstab', 't1'} <= set(cfg.cpss) else '重构基准, 额定工况相位补偿'
        report.append(f"cpss: {source} (K_stab={p.K_stab:.4g}, T1={p.T1:.4g}, "
                      f"T2={p.T2:.4g}, T_w={p.T_w:.4g})")
    report.append("")
    for sc in cfg.scenarios:
        ss = build_plant(cfg.plant, sc.operating_point).ss
        results = {}
        report.append(f"== {sc.name} (P={sc.P}, Q={sc.Q}, step={sc.step}) ==")
        report.append(f"  {'controller':<10} {'ise':>24} {'settling':>10} {'overshoot':>12} "
                      f"{'tau':>10} stable")
        for name in roster:
            kind, controller = controllers[name]
            tr = simulate(ss, controller, sc.with_controller(kind))
            path = save_trajectory_csv(tr, out / f"{sc.name}_{name}.csv")
            metrics = compute_metrics(tr)
            results[name] = metrics
            rows.append({'scenario': sc.name, 'controller': name, 'metrics': metrics,
                         'trajectory': path.name})
            tau = f"{metrics.damping_tau:.4f}" if metrics.damping_tau is not None else 'n/a'
            report.append(f"  {name:<10} {metrics.ise!r:>24} {metrics.settling_time:>10.4f} "
                          f"{metrics.overshoot:>12.6g} {tau:>10} {metrics.stable}")

        if len(roster) > 1:
            order = _ranking(results)
            report.append(f"  排名(调节时间): {' < '.join(order)}")
            report.append(f"  最优: {order[0]}")
            tuned = [r for r in roster if r in MODES]
            if 'cpss' in results and tuned:
                spread = relative_spread(results[tuned[0]].settling_time,
                                         results['cpss'].settling_time)
                report.append(f"  {tuned[0]} 与 cpss 调节时间相差 {spread:.1%}")
        report.append("")

    save_metrics_csv(rows, out / 'metrics.csv')
    save_text(report, out / 'report.txt')
    print('\n'.join(report))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='配置文件 (YAML)')
    common.add_argument('--presets', help='预设目录')
    common.add_argument('--seed', type=int, help='随机种子')
    common.add_argument('--out', default='exports', help='输出目录')
    common.add_argument('--csv', action='store_true', help='以 CSV 格式输出')
    common.add_argument('-v', '--verbose', action='store_true', help='输出调试日志')
    common.add_argument('-q', '--quiet', action='store_true', help='只输出警告和错误')

    parser = argparse.ArgumentParser(prog='pss_lab', description='SMIB 电力系统稳定器实验台')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('kconst', parents=[common], help='K1-K6 常数与开环特征值')
    p.add_argument('--cpss', action='store_true', help='同时给出接入 CPSS 后的机电模式')
    p.set_defaults(func=cmd_kconst)

    p = sub.add_parser('simulate', parents=[common], help='单个场景的阶跃响应')
    p.add_argument('--scenario', default='nominal')
    p.add_argument('--controller', default='none', choices=ROSTER_CHOICES)
    p.add_argument('--step', type=float, help='覆盖场景的转矩阶跃 (p.u.)')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('tune', parents=[common], help='遗传算法整定')
    p.add_argument('--mode', choices=MODES)
    p.add_argument('--scenarios', help='逗号分隔的场景名，默认全部')
    p.add_argument('--generations', type=int)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser('compare', parents=[common], help='无 PSS / CPSS / GA 整定控制器对比')
    p.add_argument('--roster', help=f"逗号分隔，可选 {', '.join(ROSTER_CHOICES)}")
    p.add_argument('--tune-inline', action='store_true', help='缺少整定结果时现场整定')
    p.set_defaults(func=cmd_compare)

    return parser


def run(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except PssLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG
