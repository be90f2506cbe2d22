"""
PSS 实验台核心模块
"""
from .errors import PssLabError, InvalidParams, ConfigError, Diverged
from .plant_params import (GeneratorParams, ExciterParams, NetworkParams,
                           OperatingPoint, PlantParams)
from .smib_model import build_plant, eigenvalues
from .controllers import CpssParams, cpss_build
from .fuzzy_pss import FlcConfig, flc_output
from .sim_engine import Scenario, Trajectory, Metrics, simulate, compute_metrics
from .ga_tuner import GaConfig, GeneSpec, GaRun, run_ga, TuningProblem

__all__ = [
    'PssLabError', 'InvalidParams', 'ConfigError', 'Diverged',
    'GeneratorParams', 'ExciterParams', 'NetworkParams', 'OperatingPoint', 'PlantParams',
    'build_plant', 'eigenvalues',
    'CpssParams', 'cpss_build',
    'FlcConfig', 'flc_output',
    'Scenario', 'Trajectory', 'Metrics', 'simulate', 'compute_metrics',
    'GaConfig', 'GeneSpec', 'GaRun', 'run_ga', 'TuningProblem',
]
