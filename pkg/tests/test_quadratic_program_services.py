import numpy as np
import pytest
from scipy.optimize import minimize

from app.errors import QPInfeasible
from app.models.solver import QuadraticProgram, SolverStatus
from app.services.quadratic_program_services import QuadraticProgramSolver


def test_box_projection():
    target = np.array([-0.5, 0.3, 1.7])
    qp = QuadraticProgram(Q=np.ones(3), c=-target, lb=np.zeros(3), ub=np.ones(3))
    result = QuadraticProgramSolver.solve_qp_linear(qp)
    assert result.status == SolverStatus.OPTIMAL
    np.testing.assert_allclose(result.x, [0.0, 0.3, 1.0], atol=1e-8)
    # Active bounds are snapped exactly
    assert result.x[0] == 0.0
    assert result.x[2] == 1.0


def test_single_inequality():
    # min 1/2 |x|^2 - x1 - x2  s.t.  x1 + x2 <= 1
    qp = QuadraticProgram(Q=np.eye(2), c=[-1.0, -1.0], G=[[1.0, 1.0]], h=[1.0])
    result = QuadraticProgramSolver.solve_qp_linear(qp)
    np.testing.assert_allclose(result.x, [0.5, 0.5], atol=1e-8)
    assert result.objective == pytest.approx(-0.75, abs=1e-9)
    assert result.multipliers[0] == pytest.approx(0.5, abs=1e-6)


def test_unconstrained():
    qp = QuadraticProgram(Q=[[2.0, 0.0], [0.0, 4.0]], c=[-2.0, -4.0])
    result = QuadraticProgramSolver.solve_qp_linear(qp)
    np.testing.assert_allclose(result.x, [1.0, 1.0])


def test_infeasible():
    qp = QuadraticProgram(Q=np.ones(2), c=np.zeros(2), G=[[1.0, 1.0]], h=[-1.0], lb=np.zeros(2))
    with pytest.raises(QPInfeasible):
        QuadraticProgramSolver.solve_qp_linear(qp)


def test_shape_validation():
    with pytest.raises(ValueError):
        QuadraticProgram(Q=np.eye(3), c=np.zeros(2))


@pytest.mark.parametrize('seed', range(6))
def test_agrees_with_scipy(seed):
    rng = np.random.default_rng(seed)
    n = 4
    B = rng.normal(size=(n, n))
    Q = B @ B.T + 0.1 * np.eye(n)
    c = rng.normal(size=n) * 3.0
    G = rng.normal(size=(2, n))
    h = rng.uniform(0.2, 1.0, size=2)
    qp = QuadraticProgram(Q=Q, c=c, G=G, h=h, lb=-np.ones(n), ub=np.ones(n))
    ours = QuadraticProgramSolver.solve_qp_linear(qp)

    ref = minimize(
        qp.objective,
        np.zeros(n),
        jac=lambda x: Q @ x + c,
        method='SLSQP',
        bounds=[(-1.0, 1.0)] * n,
        constraints=[{'type': 'ineq', 'fun': lambda x: h - G @ x, 'jac': lambda x: -G}],
        options={'ftol': 1e-12, 'maxiter': 500},
    )
    assert ref.success
    assert np.all(G @ ours.x <= h + 1e-8)
    assert np.all(np.abs(ours.x) <= 1.0 + 1e-12)
    assert ours.objective <= ref.fun + 1e-7
    assert ours.objective == pytest.approx(ref.fun, abs=1e-5)
