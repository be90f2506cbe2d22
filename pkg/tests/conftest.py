import numpy as np
import pytest

from core.plant_params import OperatingPoint, PlantParams
from core.sim_engine import Scenario
from core.smib_model import StateSpace, build_plant

LOADINGS = {
    'light': OperatingPoint(P_e0=0.4, Q_e0=0.5, V_t0=1.05),
    'nominal': OperatingPoint(P_e0=1.0, Q_e0=0.015, V_t0=1.05),
    'heavy': OperatingPoint(P_e0=1.25, Q_e0=0.25, V_t0=1.05),
}


@pytest.fixture
def plant() -> PlantParams:
    return PlantParams()


@pytest.fixture(params=sorted(LOADINGS))
def loading(request):
    return request.param, LOADINGS[request.param]


@pytest.fixture
def nominal_model(plant):
    return build_plant(plant, LOADINGS['nominal'])


@pytest.fixture
def first_order() -> StateSpace:
    """dx/dt = -x + dTm"""
    return StateSpace(A=np.array([[-1.0]]), B_tm=np.array([1.0]), B_u=np.array([0.0]),
                      C_omega=np.array([1.0]), C_delta=np.array([0.0]), labels=('x',))


@pytest.fixture
def short_scenario() -> Scenario:
    return Scenario(name='nominal', P=1.0, Q=0.015, V_t=1.05, step=0.01, T_sim=2.0, dt=0.005)


@pytest.fixture
def lab_config(tmp_path):
    """缩短仿真时长的配置文件，供命令行测试使用"""
    path = tmp_path / 'config.yaml'
    path.write_text(
        "simulation:\n"
        "  dt: 0.005\n"
        "  t_sim: 2.0\n"
        "scenarios:\n"
        "  nominal:\n"
        "    P: 1.0\n"
        "    Q: 0.015\n"
        "    Vt: 1.05\n"
        "    step: 0.01\n"
        "cpss:\n"
        "  kstab: 10.0\n"
        "  t1: 0.2\n"
        "ga:\n"
        "  population: 4\n"
        "  generations: 2\n"
        "  window: 5\n"
        "  mode: ga-cpss\n"
        "  dt: 0.01\n"
        "  seed: 3\n",
        encoding='utf-8')
    return path
