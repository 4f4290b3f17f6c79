import numpy as np
import pytest

from app.errors import InvalidInput
from app.models.trajectory import Trajectory
from app.services.scenario_services import ScenarioService
from app.services.trajectory_services import TrajectoryService


def test_circular_lap(short_scenario):
    s = short_scenario
    traj = TrajectoryService.circular(s, radius=15.0)
    assert traj.N == s.N
    np.testing.assert_array_equal(traj.q[0], s.q_init)
    np.testing.assert_array_equal(traj.q[-1], s.q_init)
    steps = traj.step_lengths()
    np.testing.assert_allclose(steps, steps[0], rtol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(traj.q, axis=1), 15.0, rtol=1e-12)
    assert TrajectoryService.is_feasible(s, traj)


def test_circular_rejects_point_off_circle(short_scenario):
    with pytest.raises(InvalidInput):
        TrajectoryService.circular(short_scenario, radius=20.0)


def test_circular_rejects_negative_radius(short_scenario):
    with pytest.raises(InvalidInput):
        TrajectoryService.circular(short_scenario, radius=-1.0)


def test_circular_too_fast(short_scenario):
    # Two one-second slots cannot cover a radius-15 lap at 10 m/s
    s = ScenarioService.with_overrides(short_scenario, T=2.0)
    with pytest.raises(InvalidInput):
        TrajectoryService.circular(s, radius=15.0)


def test_circular_needs_closed_path(short_scenario):
    s = ScenarioService.with_overrides(short_scenario, q_final=(-15.0, 0.0))
    with pytest.raises(InvalidInput):
        TrajectoryService.circular(s, radius=15.0)


def test_stationary(short_scenario):
    traj = TrajectoryService.stationary(short_scenario)
    assert np.all(traj.step_lengths() == 0.0)
    assert TrajectoryService.is_feasible(short_scenario, traj)


def test_stationary_needs_closed_path(short_scenario):
    s = ScenarioService.with_overrides(short_scenario, q_final=(5.0, 0.0))
    with pytest.raises(InvalidInput):
        TrajectoryService.stationary(s)


def test_straight_line(short_scenario):
    s = ScenarioService.with_overrides(short_scenario, q_final=(-15.0, 0.0))
    traj = TrajectoryService.straight_line(s)
    np.testing.assert_allclose(traj.step_lengths(), 3.0)
    np.testing.assert_array_equal(traj.q[-1], s.q_final)
    assert TrajectoryService.is_feasible(s, traj)


def test_is_feasible_flags_violations(short_scenario):
    s = short_scenario
    good = TrajectoryService.circular(s, radius=15.0)
    jump = np.array(good.q)
    jump[3] += (30.0, 0.0)
    assert not TrajectoryService.is_feasible(s, Trajectory(q=jump, delta=s.delta))
    moved_end = np.array(good.q)
    moved_end[-1] += (0.5, 0.0)
    assert not TrajectoryService.is_feasible(s, Trajectory(q=moved_end, delta=s.delta))
    assert not TrajectoryService.is_feasible(s, Trajectory(q=good.q[:-1], delta=s.delta))


def test_trajectory_model():
    traj = Trajectory(q=[[0.0, 0.0], [3.0, 4.0], [3.0, 4.0]], delta=0.5)
    np.testing.assert_allclose(traj.speeds(), [0.0, 10.0, 0.0])
    assert traj.mean_distance_to((3.0, 4.0)) == 0.0
    with pytest.raises(ValueError):
        Trajectory(q=[[0.0, 0.0, 0.0]], delta=1.0)
