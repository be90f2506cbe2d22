import numpy as np
import pytest

from core.controllers import CpssParams
from core.errors import ConfigError
from core.ga_tuner import GaConfig, GeneSpec, run_ga, tuned_fragment
from core.sim_engine import Scenario, Trajectory, simulate
from core.smib_model import StateSpace
from utils.file_io import (load_fragment, load_trajectory_csv, save_fragment, save_ga_log_csv,
                           save_trajectory_csv)


class TestTrajectoryCsv:
    def test_exact_values(self, nominal_model, short_scenario, tmp_path):
        tr = simulate(nominal_model.ss, None, short_scenario)
        path = save_trajectory_csv(tr, tmp_path / 'run.csv')
        assert path.read_text(encoding='utf-8').splitlines()[0] == 't,delta_omega,delta_delta,u_pss'

        loaded = load_trajectory_csv(path)
        np.testing.assert_array_equal(loaded.delta_omega, tr.delta_omega)
        np.testing.assert_array_equal(loaded.t, tr.t)
        assert not loaded.diverged

    def test_diverged_header(self, tmp_path):
        ss = StateSpace(A=np.array([[5.0]]), B_tm=np.array([1.0]), B_u=np.array([0.0]),
                        C_omega=np.array([1.0]), C_delta=np.array([0.0]), labels=('x',))
        tr = simulate(ss, None, Scenario(step=1.0, T_sim=5.0, dt=0.01))
        path = save_trajectory_csv(tr, tmp_path / 'div.csv')
        assert path.read_text(encoding='utf-8').startswith('# diverged at t=')

        loaded = load_trajectory_csv(path)
        assert loaded.diverged
        assert loaded.divergence_time == tr.divergence_time
        assert loaded.T_sim == 5.0

    def test_missing_header(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text('0,0,0,0\n', encoding='utf-8')
        with pytest.raises(ConfigError):
            load_trajectory_csv(path)


class TestGaLog:
    def test_columns(self, tmp_path):
        specs = (GeneSpec('kstab', 0.1, 50.0), GeneSpec('t1', 0.01, 1.0))
        run = run_ga(GaConfig(generations=3, window=10), specs, lambda v: -float(np.sum(v)))
        lines = save_ga_log_csv(run, tmp_path / 'ga.csv').read_text(encoding='utf-8').splitlines()
        assert lines[0] == 'generation,best_fitness,mean_fitness,kstab,t1'
        assert len(lines) == 1 + len(run.records)
        assert lines[1].startswith('0,')
        assert float(lines[-1].split(',')[1]) == run.records[-1].best_fitness


class TestFragment:
    @pytest.fixture
    def fragment_path(self, tmp_path):
        specs = (GeneSpec('kstab', 0.1, 50.0), GeneSpec('t1', 0.01, 1.0))
        run = run_ga(GaConfig(generations=2, mode='ga-cpss'), specs, lambda v: -float(np.sum(v)))
        ctrl = CpssParams(K_stab=run.best_params['kstab'], T1=run.best_params['t1'])
        return save_fragment(tuned_fragment(run, 'ga-cpss', ctrl), tmp_path / 'tuned.yaml'), ctrl

    def test_load(self, fragment_path):
        path, ctrl = fragment_path
        assert load_fragment(path, 'ga-cpss') == ctrl

    def test_mode_mismatch(self, fragment_path):
        path, _ = fragment_path
        with pytest.raises(ConfigError):
            load_fragment(path, 'ga-flpss')

    def test_missing(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_fragment(tmp_path / 'none.yaml', 'ga-flpss')
        assert 'tune --mode ga-flpss' in info.value.message
