import numpy as np
import pytest

from app.services.channel_services import ChannelService
from app.services.closed_form_services import ClosedFormService
from app.services.physical_layer_services import PhysicalLayerService
from app.services.trajectory_services import TrajectoryService


@pytest.fixture
def circle_state(short_scenario):
    s = short_scenario
    return s, ChannelService.link_state(s, TrajectoryService.circular(s, radius=15.0))


def test_phases_are_reduced(circle_state):
    s, ls = circle_state
    theta = ClosedFormService.optimal_phases(ls, s).theta
    assert theta.shape == (s.K, s.N, s.M)
    assert np.all((theta >= 0.0) & (theta < 2.0 * np.pi))


def test_optimal_phases_reach_x0_closed_form(circle_state):
    s, ls = circle_state
    theta = ClosedFormService.optimal_phases(ls, s).theta
    for k in range(s.K):
        for n in (0, s.N // 2, s.N - 1):
            x0, xbar0 = PhysicalLayerService.deterministic_terms(s, ls, k, n, theta[k, n])
            assert abs(x0) ** 2 == pytest.approx(ClosedFormService.x0_sq_opt(ls, s, k, n), rel=1e-9)
            assert abs(xbar0) ** 2 == pytest.approx(ClosedFormService.xbar0_sq_opt(ls, k, n), rel=1e-9)


def test_rate_table_matches_rate_bound(circle_state):
    s, ls = circle_state
    table = ClosedFormService.rate_table(ls, s)
    theta = ClosedFormService.optimal_phases(ls, s).theta
    for k in range(s.K):
        for n in range(0, s.N, 3):
            by_x0 = PhysicalLayerService.primary_rate_bound(s, ls, ClosedFormService.x0_sq_opt(ls, s, k, n), k, n)
            assert table[k, n] == pytest.approx(by_x0, rel=1e-12)
            assert ClosedFormService.rate_uk(ls, s, k, n) == pytest.approx(by_x0, rel=1e-12)
            assert ClosedFormService.phase_rate_bound(s, ls, k, n, theta[k, n]) == pytest.approx(by_x0, rel=1e-9)


def test_optimal_phases_beat_random_phases(circle_state):
    s, ls = circle_state
    rng = np.random.default_rng(8)
    table = ClosedFormService.rate_table(ls, s)
    for _ in range(20):
        k, n = int(rng.integers(s.K)), int(rng.integers(s.N))
        phases = rng.uniform(0.0, 2.0 * np.pi, s.M)
        assert ClosedFormService.phase_rate_bound(s, ls, k, n, phases) <= table[k, n] + 1e-12


def test_utility_table(circle_state):
    s, ls = circle_state
    expected = PhysicalLayerService.utility(PhysicalLayerService.snr_table(ls, s), s)
    np.testing.assert_allclose(ClosedFormService.utility_table(ls, s), expected)
    gamma = (ls.c1[2] + ls.c3[2]) * ls.beta1[2, 5] / s.sigma2
    assert ClosedFormService.utility_table(ls, s)[2, 5] == pytest.approx(np.log2(1.0 + s.s_pref * gamma))


def test_direct_link_alone_exceeds_threshold(circle_state):
    s, ls = circle_state
    direct = np.log2(1.0 + s.P * ls.beta3 / s.sigma2)
    assert np.all(direct > s.R_th)
    assert np.all(ClosedFormService.rate_table(ls, s) >= direct[None, :])
