import numpy as np
import pytest

from app.errors import InfeasibleStart
from app.models.scenario import AlgorithmSettings
from app.models.solver import ConstraintBlock, SmoothConvexProgram, SolverStatus
from app.services.barrier_services import BarrierSolver
from app.services.sca_services import ScaTrajectoryService

LN2 = np.log(2.0)


def _affine(name, A, b):
    """Block A x - b <= 0"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    return ConstraintBlock(name=name, values=lambda x: A @ x - b, jacobian=lambda x: A)


def _log_rate_program(x0):
    """max log2(1 + x1) + log2(1 + x2)  s.t.  x1 + x2 <= 2,  x >= 0"""
    return SmoothConvexProgram(
        objective=lambda x: float(np.sum(np.log1p(x)) / LN2),
        gradient=lambda x: 1.0 / ((1.0 + x) * LN2),
        hessian=lambda x: np.diag(-1.0 / ((1.0 + x) ** 2 * LN2)),
        constraints=[_affine('budget', [[1.0, 1.0]], [2.0]), _affine('nonneg', -np.eye(2), np.zeros(2))],
        x0=x0,
        name='log_rate',
    )


def test_log_rate_example():
    result = BarrierSolver.solve_sca_subproblem(_log_rate_program([0.5, 0.2]))
    assert result.status == SolverStatus.OPTIMAL
    np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-6)
    assert result.objective == pytest.approx(2.0, abs=1e-7)
    assert result.gap_bound <= 1e-8
    assert result.barrier_stages > 1


def _quad_over_linear_program(x0):
    """
    min t  s.t.  y^2 / z <= t,  y >= 1,  0 < z <= 2  (variables y, z, t)

    The optimum is y = 1, z = 2, t = 1/2.
    """

    def values(x):
        y, z, t = x
        return np.array([y ** 2 / z - t if z > 0 else np.inf])

    def jacobian(x):
        y, z, _ = x
        return np.array([[2.0 * y / z, -(y / z) ** 2, -1.0]])

    def hessian(x, w):
        y, z, _ = x
        H = np.zeros((3, 3))
        H[:2, :2] = w[0] * np.array([[2.0 / z, -2.0 * y / z ** 2], [-2.0 * y / z ** 2, 2.0 * y ** 2 / z ** 3]])
        return H

    return SmoothConvexProgram(
        objective=lambda x: -float(x[2]),
        gradient=lambda x: np.array([0.0, 0.0, -1.0]),
        hessian=lambda x: np.zeros((3, 3)),
        constraints=[
            ConstraintBlock(name='cone', values=values, jacobian=jacobian, hessian=hessian),
            _affine('y_floor', [[-1.0, 0.0, 0.0]], [-1.0]),
            _affine('z_box', [[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]], [2.0, 0.0]),
        ],
        x0=x0,
        name='quad_over_linear',
    )


def test_quad_over_linear():
    result = BarrierSolver.solve_sca_subproblem(_quad_over_linear_program([1.5, 1.0, 5.0]))
    np.testing.assert_allclose(result.x, [1.0, 2.0, 0.5], atol=1e-6)
    assert result.objective == pytest.approx(-0.5, abs=1e-7)


def test_equality_constrained():
    # max -(x1^2 + x2^2)  s.t.  x1 + x2 = 1,  x1 > 0
    p = SmoothConvexProgram(
        objective=lambda x: -float(x @ x),
        gradient=lambda x: -2.0 * x,
        hessian=lambda x: -2.0 * np.eye(2),
        constraints=[_affine('x1_positive', [[-1.0, 0.0]], [0.0])],
        A_eq=[[1.0, 1.0]],
        b_eq=[1.0],
        x0=[0.3, 0.7],
    )
    result = BarrierSolver.solve_sca_subproblem(p)
    # Central point for weight mu is x1 = 0.5 + mu/2, so the final stage sits within 1e-8
    np.testing.assert_allclose(result.x, [0.5, 0.5], atol=1e-7)
    assert result.x.sum() == pytest.approx(1.0, abs=1e-10)
    assert result.gap_bound <= 1e-8
    # Every stage has to move the point, the last ones included
    assert result.newton_steps >= result.barrier_stages


# One free waypoint q1 = (x, y) between q0 = q2 = (0, 0), one IRS at (30, 0), gain slack z.
# z is bounded by the first-order gain bound expanded at q0, normalised to 1 there.
_IRS = np.array([30.0, 0.0])
_HEIGHT = 20.0
_ALPHA = 2.4
_REACH = 10.0
_SNR = 100.0
_NORM = (900.0 + _HEIGHT ** 2) ** (_ALPHA / 2.0)
_SLOPE = (_ALPHA / 2.0) / (900.0 + _HEIGHT ** 2)


def _gain_bound(points):
    return _NORM * ScaTrajectoryService.taylor_gain_bound(1.0, _ALPHA, _HEIGHT, points, np.zeros(2), _IRS)


def _waypoint_program():
    def gain_values(x):
        return np.array([x[2] - _gain_bound(x[:2])])

    def gain_jacobian(x):
        return np.concatenate([2.0 * _SLOPE * (x[:2] - _IRS), [1.0]])[None, :]

    def gain_hessian(x, w):
        return np.diag([2.0 * _SLOPE * w[0], 2.0 * _SLOPE * w[0], 0.0])

    def reach_values(x):
        return np.array([x[0] ** 2 + x[1] ** 2 - _REACH ** 2])

    def reach_jacobian(x):
        return np.array([[2.0 * x[0], 2.0 * x[1], 0.0]])

    def reach_hessian(x, w):
        return np.diag([2.0 * w[0], 2.0 * w[0], 0.0])

    def objective(x):
        arg = 1.0 + _SNR * x[2]
        return float(np.log2(arg)) if arg > 0 else -np.inf

    return SmoothConvexProgram(
        objective=objective,
        gradient=lambda x: np.array([0.0, 0.0, _SNR / ((1.0 + _SNR * x[2]) * LN2)]),
        hessian=lambda x: np.diag([0.0, 0.0, -_SNR ** 2 / ((1.0 + _SNR * x[2]) ** 2 * LN2)]),
        constraints=[
            ConstraintBlock(name='gain', values=gain_values, jacobian=gain_jacobian, hessian=gain_hessian),
            ConstraintBlock(name='reach', values=reach_values, jacobian=reach_jacobian, hessian=reach_hessian),
        ],
        x0=[0.0, 0.0, 0.5],
        name='waypoint',
    )


def test_waypoint_matches_grid_search():
    result = BarrierSolver.solve_sca_subproblem(_waypoint_program())
    assert result.status == SolverStatus.OPTIMAL

    # Polar grid over the reachable disk; z sits on its bound at the optimum
    radius, angle = np.meshgrid(np.linspace(0.0, _REACH, 101), np.linspace(-np.pi, np.pi, 20001), indexing='ij')
    points = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    grid_best = float(np.max(np.log2(1.0 + _SNR * _gain_bound(points))))

    assert result.objective == pytest.approx(grid_best, abs=1e-4)
    assert result.objective <= grid_best + 1e-9
    np.testing.assert_allclose(result.x[:2], [_REACH, 0.0], atol=1e-2)
    assert result.x[2] == pytest.approx(_gain_bound(result.x[:2]), abs=1e-6)


def test_iterates_stay_strictly_feasible():
    result = BarrierSolver.solve_sca_subproblem(_log_rate_program([0.01, 0.01]))
    assert result.x.sum() < 2.0
    assert np.all(result.x > 0.0)


def test_rejects_infeasible_start():
    p = _log_rate_program([1.5, 1.5])
    assert not BarrierSolver.is_strictly_feasible(p)
    with pytest.raises(InfeasibleStart):
        BarrierSolver.solve_sca_subproblem(p)


def test_rejects_boundary_start():
    with pytest.raises(InfeasibleStart):
        BarrierSolver.solve_sca_subproblem(_log_rate_program([0.0, 1.0]))


def test_rejects_equality_violation():
    p = SmoothConvexProgram(
        objective=lambda x: -float(x @ x),
        gradient=lambda x: -2.0 * x,
        hessian=lambda x: -2.0 * np.eye(2),
        A_eq=[[1.0, 1.0]],
        b_eq=[1.0],
        x0=[0.3, 0.3],
    )
    with pytest.raises(InfeasibleStart):
        BarrierSolver.solve_sca_subproblem(p)


def test_newton_cap_reports_stalled():
    settings = AlgorithmSettings(max_newton_iter=1)
    result = BarrierSolver.solve_sca_subproblem(_log_rate_program([0.05, 0.01]), settings)
    assert result.status == SolverStatus.STALLED
    assert result.x.sum() < 2.0
