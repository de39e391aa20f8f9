import json
import math

import numpy as np
import pandas as pd
import pytest

from ambc.models.allocation import AllocationState
from ambc.repositories.results_repository import ResultsRepository
from ambc.repositories.scenario_repository import ScenarioRepository
from ambc.utils.exceptions import ConfigError, StorageError, ValidationError


@pytest.fixture
def scenarios() -> ScenarioRepository:
    return ScenarioRepository()


@pytest.fixture
def results(tmp_path) -> ResultsRepository:
    return ResultsRepository(tmp_path / 'runs')


def write(tmp_path, text, name='scenario.env'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return path


class TestScenarioRepository:
    def test_reads_aliases_comments_and_vectors(self, scenarios, tmp_path):
        path = write(tmp_path, "# two BDs\nM=2\nN=32\n\nd_fap_bd=3, 5\nE_min=2e-6  # per BD\nlog_base=e\n")
        config = scenarios.load_scenario(path)
        assert config.num_bds == 2 and config.num_subcarriers == 32
        assert config.d_fap_bd == [3.0, 5.0]
        assert config.e_min == [2e-6, 2e-6]
        assert config.log_base == pytest.approx(math.e)

    def test_keys_case_insensitive(self, scenarios, tmp_path):
        config = scenarios.load_scenario(write(tmp_path, "p_peak=0.1\nnum_bds=3\n"))
        assert config.p_peak == 0.1
        assert config.num_bds == 3
        assert len(config.d_fap_bd) == 3

    def test_unknown_key_names_line(self, scenarios, tmp_path):
        path = write(tmp_path, "M=2\nbogus=1\n")
        with pytest.raises(ConfigError, match=r":2: unknown key 'bogus'"):
            scenarios.load_scenario(path)

    def test_malformed_line(self, scenarios, tmp_path):
        with pytest.raises(ConfigError, match=':1:'):
            scenarios.load_scenario(write(tmp_path, "just words\n"))

    def test_bad_value_names_key_and_line(self, scenarios, tmp_path):
        path = write(tmp_path, "M=2\neta=1.5\n")
        with pytest.raises(ConfigError, match=r":2: key 'eta'"):
            scenarios.load_scenario(path)

    def test_vector_length_checked(self, scenarios, tmp_path):
        with pytest.raises(ConfigError, match='d_fap_bd'):
            scenarios.load_scenario(write(tmp_path, "M=2\nd_fap_bd=1,2,3\n"))

    def test_missing_file(self, scenarios, tmp_path):
        with pytest.raises(ConfigError, match='not found'):
            scenarios.load_scenario(tmp_path / 'absent.env')

    def test_overrides(self, scenarios, tmp_path):
        path = write(tmp_path, "D=1\n")
        config = scenarios.load_scenario(path, overrides=['D=2.5', 'snr_bar_db = 10'])
        assert config.d_req == 2.5
        assert config.snr_bar_db == 10.0

    def test_unknown_override(self, scenarios):
        with pytest.raises(ConfigError, match='--set nope'):
            scenarios.load_scenario(overrides=['nope=1'])

    def test_defaults_without_file(self, scenarios):
        config = scenarios.load_scenario()
        assert config.num_bds == 2 and config.num_subcarriers == 64

    def test_presets_listed(self, scenarios):
        assert {'fig3', 'fig4'} <= set(scenarios.find_all())
        assert scenarios.find_by_name('missing') is None
        with pytest.raises(ConfigError, match='Unknown preset'):
            scenarios.load_scenario(preset='missing')

    def test_fig3_preset(self, scenarios):
        spec = scenarios.load_sweep(preset='fig3')
        assert spec.scenario_id == 'fig3'
        assert spec.sweep_var == 'D'
        assert spec.values == [0.5, 1.0, 1.5, 2.0]
        assert spec.realizations == 100
        assert spec.base.p_peak == pytest.approx(20 * spec.base.p_ave)
        assert spec.base.e_min == [1e-5, 1e-5]
        assert spec.base.d_fap_bd == [2.5, 4.0]
        assert [family.label for family in spec.families] == ['snr10', 'snr20']
        labels = [label for label, _ in spec.family_configs()]
        assert labels == ['snr10', 'snr20']
        assert spec.family_configs()[0][1].snr_bar_db == 10.0

    def test_fig4_preset(self, scenarios):
        spec = scenarios.load_sweep(preset='fig4')
        assert spec.sweep_var == 'snr_db'
        assert spec.values == [10.0, 15.0, 20.0, 25.0]
        configs = dict(spec.family_configs())
        assert configs['emin50u'].e_min == [5e-5, 5e-5]
        assert configs['peak40x'].p_peak == pytest.approx(40 * configs['peak40x'].p_ave)
        assert configs['peak10x'].p_peak == pytest.approx(10 * configs['peak10x'].p_ave)

    def test_empty_sweep_values(self, scenarios, tmp_path):
        path = write(tmp_path, "SWEEP_VAR=D\nSWEEP_VALUES=\n")
        with pytest.raises(ValidationError, match='(?i)sweep_values'):
            scenarios.load_sweep(path)

    def test_sweep_needs_variable(self, scenarios, tmp_path):
        with pytest.raises(ConfigError, match='SWEEP_VAR'):
            scenarios.load_sweep(write(tmp_path, "M=2\n"))

    def test_unknown_sweep_variable(self, scenarios, tmp_path):
        with pytest.raises(ValidationError, match='sweep'):
            scenarios.load_sweep(write(tmp_path, "SWEEP_VAR=eta\nSWEEP_VALUES=0.1\n"))

    def test_family_with_unknown_key(self, scenarios, tmp_path):
        path = write(tmp_path, 'SWEEP_VAR=D\nSWEEP_VALUES=1\nFAMILIES="a: foo=1"\n')
        with pytest.raises(ConfigError, match='foo=1'):
            scenarios.load_sweep(path)


class TestResultsRepository:
    def state(self):
        return AllocationState(tau=np.array([0.4, 0.6]), alpha=np.array([0.5, 1.0]),
                               power=np.arange(6, dtype=float).reshape(2, 3) / 10, objective=0.125)

    def test_run_directory(self, results):
        run_dir = results.create_run('solve-x-seed1')
        assert run_dir.is_dir()
        assert results.find_all() == ['solve-x-seed1']
        assert results.find_by_name('solve-x-seed1') == run_dir
        assert results.find_by_name('other') is None

    def test_frame_format(self, results):
        run_dir = results.create_run('r')
        frame = pd.DataFrame({'value': [0.1, 1.0 / 3.0], 'joint_q': [None, 2.0]})
        path = results.write_frame(run_dir, 'records.csv', frame)
        assert path.read_text(encoding='utf-8') == "value,joint_q\n0.1,\n0.333333333333,2\n"

    def test_state_round_trip(self, results, tmp_path):
        path = results.save_state(tmp_path / 'state.json', self.state(), seed=5)
        saved = results.load_state(path)
        assert saved.seed == 5
        restored = saved.to_state()
        np.testing.assert_array_equal(restored.power, self.state().power)
        assert restored.objective == 0.125

    def test_state_csv(self, results):
        path = results.write_state_csv(results.create_run('r'), self.state())
        frame = pd.read_csv(path)
        assert list(frame.columns) == ['m', 'tau', 'alpha', 'p_0', 'p_1', 'p_2']
        assert frame['tau'].tolist() == [0.4, 0.6]

    def test_malformed_state(self, results, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'tau': [0.5], 'alpha': 'x', 'power': [[1.0]]}), encoding='utf-8')
        with pytest.raises(ValidationError, match='alpha'):
            results.load_state(path)

    def test_missing_state(self, results, tmp_path):
        with pytest.raises(StorageError):
            results.load_state(tmp_path / 'none.json')

    def test_channels_long_format(self, results, channel_service, reference_config):
        taps = channel_service.sample_taps(reference_config, 1)
        grid = channel_service.frequency_response(taps, 64)
        frame = pd.read_csv(results.write_channels(results.create_run('c'), taps, grid))
        assert list(frame.columns) == ['link', 'm', 'index', 're', 'im']
        counts = frame.groupby('link').size().to_dict()
        assert counts == {'f': 8, 'g': 8, 'h': 8, 'v': 12, 'F': 128, 'G': 128, 'H': 64, 'V': 128}

    def test_summary(self, results):
        run_dir = results.create_run('s')
        path = results.write_summary(run_dir, {
            'title': 'solve demo',
            'echo': {'seed': 1, 'parameters': {'M': 2}},
            'outcome': {'termination': 'converged'},
            'iterations': [{'index': 1, 'objective': 0.5, 'tau': '0.5, 0.5', 'alpha': '1, 1', 'wall_time': 0.01}],
            'aggregates': [],
        })
        text = path.read_text(encoding='utf-8')
        assert text.startswith('# solve demo')
        assert '| M | 2 |' in text
        assert '**termination**: converged' in text
        assert '| 1 | 0.5 |' in text

    def test_unwritable_root(self, tmp_path):
        blocker = tmp_path / 'file'
        blocker.write_text('x', encoding='utf-8')
        with pytest.raises(StorageError):
            ResultsRepository(blocker).create_run('r')
