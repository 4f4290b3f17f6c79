import csv
import json
import logging

import numpy as np
import pytest

from app.errors import IoError, ParseError, ValidationError
from app.models.report import SolveReport, SolveStatus
from app.models.trajectory import Schedule
from app.services.scenario_services import (
    ScenarioService,
    dbm_to_watt,
    to_db,
    to_linear,
    watt_to_dbm,
)
from app.services.trajectory_services import TrajectoryService


def test_unit_helpers():
    assert to_linear(10.0) == pytest.approx(10.0)
    assert to_db(1000.0) == pytest.approx(30.0)
    assert dbm_to_watt(20.0) == pytest.approx(0.1)
    assert dbm_to_watt(-60.0) == pytest.approx(1e-9)
    assert watt_to_dbm(1.0) == pytest.approx(30.0)


def test_default_scenario_values(default_scenario):
    s = default_scenario
    assert s.K == 5
    assert s.N == 400
    assert s.M == 50
    assert s.P == pytest.approx(0.1)
    assert s.sigma2 == pytest.approx(1e-9)
    assert s.beta0 == pytest.approx(1e-3)
    assert s.K1 == pytest.approx(10.0)
    assert s.weights == (1.0,) * 5
    assert s.s_pref == pytest.approx(512 * 0.1)
    assert s.d_spacing == pytest.approx(0.5 * s.wavelength)
    assert s.q_init == (15.0, 0.0)


def test_shipped_file_matches_builtin(default_scenario, scenario_file):
    assert ScenarioService.load_scenario(scenario_file) == default_scenario


def test_save_load_roundtrip(default_scenario, tmp_path):
    path = tmp_path / 'scenario.json'
    ScenarioService.save_scenario(default_scenario, path)
    assert ScenarioService.load_scenario(path) == default_scenario


def test_roundtrip_keeps_rayleigh_and_odd_powers(default_scenario, tmp_path):
    s = ScenarioService.with_overrides(default_scenario, K3=0.0, P=dbm_to_watt(23.7), weights=(1.0, 1.0, 0.5, 1.0, 1.0))
    path = tmp_path / 'odd.json'
    ScenarioService.save_scenario(s, path)
    loaded = ScenarioService.load_scenario(path)
    assert loaded == s
    assert json.loads(path.read_text())['rician_factors_db'][2] is None


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        ScenarioService.load_scenario(tmp_path / 'absent.json')


def test_malformed_json_is_parse_error(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{"irs_positions": [[1, 2]', encoding='utf-8')
    with pytest.raises(ParseError):
        ScenarioService.load_scenario(path)


def test_top_level_array_is_parse_error(tmp_path):
    path = tmp_path / 'list.json'
    path.write_text('[1, 2, 3]', encoding='utf-8')
    with pytest.raises(ParseError):
        ScenarioService.load_scenario(path)


def _write(tmp_path, scenario_file, **changes):
    raw = json.loads(scenario_file.read_text())
    raw.update(changes)
    path = tmp_path / 'edited.json'
    path.write_text(json.dumps(raw), encoding='utf-8')
    return path


@pytest.mark.parametrize('changes, field', [
    ({'uav_altitude': 5.0}, 'H_u'),
    ({'period': 40.05}, 'T'),
    ({'weights': [1.0, 1.0]}, 'weights'),
    ({'q_final': [500.0, 0.0]}, 'q_final'),
    ({'rho': 1.5}, 'rho'),
    ({'unexpected_key': 1}, 'unexpected_key'),
])
def test_invalid_fields_are_named(tmp_path, scenario_file, changes, field):
    path = _write(tmp_path, scenario_file, **changes)
    with pytest.raises(ValidationError) as info:
        ScenarioService.load_scenario(path)
    assert info.value.field == field


def test_with_overrides_revalidates(default_scenario):
    with pytest.raises(ValidationError) as info:
        ScenarioService.with_overrides(default_scenario, weights=(1.0, -1.0, 1.0, 1.0, 1.0))
    assert info.value.field == 'weights'


def test_coarse_sets_one_second_slots(default_scenario):
    coarse = ScenarioService.coarse(default_scenario)
    assert coarse.delta == 1.0
    assert coarse.N == 40
    assert coarse.M == default_scenario.M


def test_slot_length_warning_only_on_request(default_scenario, caplog):
    with caplog.at_level(logging.WARNING):
        coarse = ScenarioService.coarse(default_scenario)
        for T in (10.0, 20.0, 30.0):
            ScenarioService.with_overrides(coarse, T=T)
    assert 'constant-channel' not in caplog.text

    assert ScenarioService.check_slot_length(default_scenario)
    with caplog.at_level(logging.WARNING):
        assert not ScenarioService.check_slot_length(coarse)
    assert caplog.text.count('constant-channel') == 1


def test_with_algorithm(default_scenario):
    s = ScenarioService.with_algorithm(default_scenario, r_max=5)
    assert s.algo.r_max == 5
    assert s.algo.eps1 == default_scenario.algo.eps1
    with pytest.raises(ValidationError):
        ScenarioService.with_algorithm(default_scenario, c_scale=1.5)


def test_describe_has_both_unit_systems(default_scenario):
    info = ScenarioService.describe(default_scenario)
    assert info['linear']['K'] == 5
    assert info['linear']['N'] == 400
    assert info['db']['transmit_power_dbm'] == pytest.approx(20.0)
    json.dumps(info)


def test_save_results_writes_tables(short_scenario, tmp_path):
    s = short_scenario
    traj = TrajectoryService.circular(s, radius=15.0)
    a = np.zeros((s.K, s.N))
    a[0] = 1.0
    report = SolveReport(algorithm='wsb', objective_trace=[1.0, 1.5], iterations=1,
                         status=SolveStatus.CONVERGED, objective=1.5)
    files = ScenarioService.save_results(report, traj, Schedule(a=a), tmp_path / 'run')

    assert set(files) == {'trajectory', 'schedule', 'trace', 'summary', 'timing'}
    with open(files['trajectory'], newline='') as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ['n', 'x', 'y', 'speed']
    assert len(rows) == s.N + 2
    with open(files['schedule'], newline='') as fh:
        assert len(list(csv.reader(fh))) == s.K * s.N + 1

    summary = json.loads(files['summary'].read_text())
    assert summary['status'] == 'Converged'
    assert summary['objective'] == 1.5
    assert summary['K'] == 5 and summary['N'] == 10
    assert 'wall_time_s' not in summary
    assert 'wall_time_s' in json.loads(files['timing'].read_text())


def test_save_results_rejects_mismatched_shapes(short_scenario, tmp_path):
    traj = TrajectoryService.circular(short_scenario, radius=15.0)
    with pytest.raises(ValueError):
        ScenarioService.save_results(SolveReport(algorithm='wsb'), traj, Schedule(a=np.zeros((5, 3))), tmp_path)
