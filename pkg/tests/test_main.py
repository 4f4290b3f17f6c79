import csv
import json

import pytest

from app.config import runner_config
from app.services.scenario_services import ScenarioService
from main import main


@pytest.fixture
def hovering_file(hovering_scenario, tmp_path):
    path = tmp_path / 'hovering.json'
    ScenarioService.save_scenario(hovering_scenario, path)
    return path


def test_show_scenario(capsys):
    assert main(['show-scenario']) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown['linear']['K'] == 5
    assert shown['linear']['N'] == 400


def test_show_scenario_coarse_with_seed(capsys, tmp_path):
    assert main(['show-scenario', '--coarse', '--seed', '11', '--out', str(tmp_path)]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown['linear']['N'] == 40
    saved = ScenarioService.load_scenario(tmp_path / 'scenario.json')
    assert saved.rng_seed == 11
    assert saved.N == 40


def test_help():
    assert main(['--help']) == 0


def test_unknown_option():
    assert main(['show-scenario', '--bogus']) == 1


def test_missing_scenario_file(tmp_path):
    assert main(['show-scenario', '--scenario', str(tmp_path / 'absent.json')]) == 1


def test_malformed_weights():
    assert main(['optimize-wsb', '--weights', 'one,two']) == 1


def test_weight_count_mismatch(hovering_file, tmp_path):
    assert main(['optimize-wsb', '--scenario', str(hovering_file), '--weights', '1,1,1', '--out', str(tmp_path)]) == 1


def test_optimize_wsb_writes_results(hovering_file, tmp_path, capsys):
    out = tmp_path / 'wsb'
    assert main(['optimize-wsb', '--scenario', str(hovering_file), '--out', str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary['algorithm'] == 'wsb'
    assert summary['status'] == 'Converged'
    for name in ('trajectory.csv', 'schedule.csv', 'trace.csv', 'summary.json', 'timing.json', 'scenario.json'):
        assert (out / name).is_file()
    with open(out / 'trajectory.csv', newline='', encoding='utf-8') as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ['n', 'x', 'y', 'speed']
    assert len(rows) == 1 + 11
    written = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
    assert written['objective'] == summary['objective']
    assert written['K'] == 2


def test_optimize_wsb_default_output_dir(hovering_file, tmp_path, monkeypatch):
    monkeypatch.setattr(runner_config, 'output_dir', str(tmp_path / 'results'))
    assert main(['optimize-wsb', '--scenario', str(hovering_file)]) == 0
    assert (tmp_path / 'results' / 'summary.json').is_file()


def test_optimize_wsb_unreachable_threshold(hovering_scenario, tmp_path):
    path = tmp_path / 'strict.json'
    ScenarioService.save_scenario(ScenarioService.with_overrides(hovering_scenario, R_th=100.0), path)
    assert main(['optimize-wsb', '--scenario', str(path), '--out', str(tmp_path / 'out')]) == 1


def test_optimize_fair_exit_code_follows_status(hovering_file, tmp_path):
    out = tmp_path / 'fair'
    code = main(['optimize-fair', '--scenario', str(hovering_file), '--out', str(out)])
    summary = json.loads((out / 'summary.json').read_text(encoding='utf-8'))
    assert code == (0 if summary['status'] == 'Converged' else 1)
    assert (out / 'outer.csv').is_file()


def test_benchmarks_subset(two_irs_scenario, tmp_path):
    out = tmp_path / 'bench'
    mobile = tmp_path / 'mobile.json'
    ScenarioService.save_scenario(two_irs_scenario, mobile)
    assert main(['benchmarks', '--scenario', str(mobile), '--out', str(out),
                 '--scheme', 'circular', '--scheme', 'upper-bound']) == 0
    with open(out / 'comparison.csv', newline='', encoding='utf-8') as fh:
        rows = list(csv.DictReader(fh))
    assert [(r['scheme'], r['objective']) for r in rows] == [
        ('circular', 'wsb'), ('upper-bound', 'wsb'), ('circular', 'fair'), ('upper-bound', 'fair'),
    ]


def test_benchmarks_rejects_unknown_scheme():
    assert main(['benchmarks', '--scheme', 'spiral']) == 1


@pytest.mark.slow
def test_verify_quick(tmp_path):
    code = main(['verify', '--quick', '--seed', '7', '--out', str(tmp_path / 'first')])
    report = json.loads((tmp_path / 'first' / 'verify_report.json').read_text(encoding='utf-8'))
    assert code == (0 if report['passed'] else 1)
    assert len(report['suites']) == 4
    main(['verify', '--quick', '--seed', '7', '--out', str(tmp_path / 'second')])
    first = (tmp_path / 'first' / 'verify_report.json').read_bytes()
    assert (tmp_path / 'second' / 'verify_report.json').read_bytes() == first


@pytest.mark.slow
def test_default_coarse_weighted_sum(tmp_path, capsys):
    assert main(['optimize-wsb', '--coarse', '--out', str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert json.loads((tmp_path / 'summary.json').read_text(encoding='utf-8'))['N'] == 40
    assert 'RateViolation' not in summary['flags']
