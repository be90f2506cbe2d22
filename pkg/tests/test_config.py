from pathlib import Path

import pytest

from core.controllers import CpssParams
from core.errors import ConfigError
from utils.config import DEFAULT_ROSTER, load_config

ROOT = Path(__file__).resolve().parents[1]


def write(tmp_path, text: str) -> Path:
    path = tmp_path / 'config.yaml'
    path.write_text(text, encoding='utf-8')
    return path


def config_error(tmp_path, text: str) -> ConfigError:
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, text))
    return info.value


class TestDefaults:
    def test_without_file(self):
        cfg = load_config()
        assert [sc.name for sc in cfg.scenarios] == ['light', 'nominal', 'heavy']
        assert cfg.roster == DEFAULT_ROSTER
        assert cfg.preset == 'paper-smib'
        assert cfg.path is None

    def test_repository_config(self):
        cfg = load_config(ROOT / 'config.yaml')
        assert cfg.dt == 0.001
        assert cfg.t_sim == 10.0
        assert cfg.ga.mode == 'ga-flpss'
        assert cfg.flc.Ke == 650.0
        assert cfg.scenario('light').step == 0.1
        assert cfg.scenario('heavy').P == 1.25

    def test_phase_compensated_cpss(self):
        p = load_config(ROOT / 'config.yaml').cpss_params()
        assert p.T_w == 10.0
        assert p.T2 == 0.05
        assert 0.1 <= p.K_stab <= 50.0

    def test_explicit_cpss(self, tmp_path):
        cfg = load_config(write(tmp_path, "cpss:\n  kstab: 12\n  t1: 0.4\n"))
        assert cfg.cpss_params() == CpssParams(K_stab=12.0, T1=0.4)


class TestSections:
    def test_plant_override(self, tmp_path):
        cfg = load_config(write(tmp_path, "plant:\n  preset: paper-smib\n  Ka: 100\n"))
        assert cfg.plant.exciter.K_a == 100.0
        assert cfg.plant.generator.M == 9.26

    def test_disabled_scenario(self, tmp_path):
        cfg = load_config(write(tmp_path,
                                "scenarios:\n  light:\n    enabled: false\n  nominal:\n    step: 0.02\n"))
        assert [sc.name for sc in cfg.scenarios] == ['nominal']
        assert cfg.scenarios[0].step == 0.02
        assert cfg.scenarios[0].P == 1.0

    def test_simulation_settings_reach_scenarios(self, tmp_path):
        cfg = load_config(write(tmp_path, "simulation:\n  dt: 0.002\n  t_sim: 3\n"))
        assert all(sc.dt == 0.002 and sc.T_sim == 3.0 for sc in cfg.scenarios)

    def test_tuned_paths(self, tmp_path):
        cfg = load_config(write(tmp_path, "compare:\n  tuned:\n    ga-cpss: out/cpss.yaml\n"))
        assert cfg.tuned == {'ga-cpss': 'out/cpss.yaml'}

    def test_unknown_scenario_name(self):
        with pytest.raises(ConfigError):
            load_config().scenario('islanded')


class TestErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / 'missing.yaml')

    def test_unknown_section(self, tmp_path):
        e = config_error(tmp_path, "plant:\n  preset: paper-smib\nbogus: 1\n")
        assert e.line == 3
        assert f":{e.line}:" in str(e)

    def test_unknown_scenario_key(self, tmp_path):
        e = config_error(tmp_path, "scenarios:\n  nominal:\n    P: 1.0\n    Pm: 2\n")
        assert e.line == 4

    def test_unknown_preset(self, tmp_path):
        e = config_error(tmp_path, "plant:\n  preset: nope\n")
        assert e.line == 2
        assert 'paper-smib' in e.message

    def test_invalid_override(self, tmp_path):
        assert config_error(tmp_path, "plant:\n  Xdp: 2.0\n").line == 2

    def test_bad_roster(self, tmp_path):
        assert config_error(tmp_path, "compare:\n  roster: [none, pid]\n").line == 2

    def test_bad_ga(self, tmp_path):
        assert config_error(tmp_path, "ga:\n  population: 3\n").line == 1

    def test_no_enabled_scenario(self, tmp_path):
        config_error(tmp_path, "scenarios:\n  nominal:\n    enabled: false\n")

    def test_section_not_mapping(self, tmp_path):
        assert config_error(tmp_path, "simulation:\n  - 1\n").line == 1

    def test_yaml_syntax(self, tmp_path):
        e = config_error(tmp_path, "simulation:\n  dt: [0.001\n")
        assert e.line is not None
