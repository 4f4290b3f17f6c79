import json

import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from app.models.report import SuiteResult, VerifyReport
from app.services.verification_services import VerificationService


def test_random_geometry_is_one_hovering_slot(default_scenario):
    s, ls = VerificationService.random_geometry(default_scenario, np.random.default_rng(5))
    assert s.N == 1
    assert 1 <= s.K <= 3
    assert s.q_init == s.q_final
    assert ls.beta1.shape == (s.K, 1)


def test_phase_coherence_passes(default_scenario):
    result = VerificationService.phase_coherence(default_scenario, seed=11, geometries=50)
    assert result.passed
    assert result.cases == 50
    assert result.statistics['max_x0_rel_error'] < 1e-9


def test_suites_are_deterministic(default_scenario):
    first = VerificationService.jensen_bound(default_scenario, seed=3, configs=2, draws=500)
    second = VerificationService.jensen_bound(default_scenario, seed=3, configs=2, draws=500)
    assert first == second
    other = VerificationService.jensen_bound(default_scenario, seed=4, configs=2, draws=500)
    assert other.statistics != first.statistics


def test_ber_formula_rows(default_scenario):
    result = VerificationService.ber_formula(default_scenario, seed=1, targets=(0.2, 0.05), symbols=5_000)
    points = result.statistics['points']
    assert [p['target'] for p in points] == [0.2, 0.05]
    for p in points:
        assert p['closed_form'] == pytest.approx(p['target'], rel=1e-9)
        assert 0.0 <= p['monte_carlo'] <= 1.0


def test_unreachable_ber_target():
    with pytest.raises(ValueError):
        VerificationService.reflect_power_for_ber(0.6, 1e-9, 0.1, 512)


def test_family_threshold():
    assert VerificationService.family_threshold(1) == pytest.approx(3.0, abs=1e-9)
    # 25 comparisons share the false-alarm level of one 3-standard-error test
    level = 2.0 * ndtr(-3.0)
    assert VerificationService.family_threshold(25) == pytest.approx(-ndtri(level / 50.0), rel=1e-12)
    assert 3.0 < VerificationService.family_threshold(10) < VerificationService.family_threshold(25) < 4.0
    with pytest.raises(ValueError):
        VerificationService.family_threshold(0)


def test_cascade_moments_reports_family_threshold(default_scenario):
    result = VerificationService.cascade_moments(default_scenario, seed=2, configs=2, draws=5_000)
    stats = result.statistics
    assert stats['comparisons'] == 10
    assert stats['threshold'] == pytest.approx(VerificationService.family_threshold(10), rel=1e-12)
    assert result.worst == pytest.approx(stats['max_z'] / stats['threshold'], rel=1e-12)
    assert result.passed == (stats['max_z'] <= stats['threshold'])



def test_report_passes_only_when_every_suite_passes():
    ok = SuiteResult(name='a', passed=True, cases=1, worst=0.1)
    bad = SuiteResult(name='b', passed=False, cases=1, worst=2.0)
    assert VerifyReport(seed=1, suites=[ok]).passed
    assert not VerifyReport(seed=1, suites=[ok, bad]).passed


def test_write_report(tmp_path):
    report = VerifyReport(seed=9, suites=[SuiteResult(name='phase_coherence', passed=True, cases=3, worst=0.5)])
    path = VerificationService.write_report(report, tmp_path / 'verify_report.json')
    payload = json.loads(path.read_text(encoding='utf-8'))
    assert payload['passed'] is True
    assert payload['seed'] == 9
    assert payload['suites'][0]['name'] == 'phase_coherence'
    # Same report, same bytes
    again = VerificationService.write_report(report, tmp_path / 'again.json')
    assert again.read_bytes() == path.read_bytes()


@pytest.mark.slow
def test_quick_run_is_reproducible(default_scenario):
    first = VerificationService.run_all(default_scenario, 7, quick=True)
    second = VerificationService.run_all(default_scenario, 7, quick=True)
    assert [suite.name for suite in first.suites] == ['phase_coherence', 'jensen_bound', 'ber_formula', 'cascade_moments']
    assert first.model_dump() == second.model_dump()
