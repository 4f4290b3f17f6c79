import numpy as np
import pytest
from scipy.optimize import linprog

from app.errors import InfeasibleLP, UnboundedLP
from app.models.solver import LinearProgram
from app.services.linear_program_services import LinearProgramSolver


def test_simple_maximisation():
    # max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  x <= 3
    lp = LinearProgram(c=[3.0, 2.0], A_ub=[[1.0, 1.0], [1.0, 3.0]], b_ub=[4.0, 6.0], ub=[3.0, np.inf], maximize=True)
    result = LinearProgramSolver.solve_lp(lp)
    np.testing.assert_allclose(result.x, [3.0, 1.0], atol=1e-10)
    assert result.objective == pytest.approx(11.0)


def test_equality_and_free_variable():
    # max x0 + 2 x1  s.t.  x0 + x1 = 1,  x0 >= -3,  x1 <= 10, both otherwise free
    lp = LinearProgram(
        c=[1.0, 2.0],
        A_ub=[[-1.0, 0.0]],
        b_ub=[3.0],
        A_eq=[[1.0, 1.0]],
        b_eq=[1.0],
        lb=[-np.inf, -np.inf],
        ub=[np.inf, 10.0],
        maximize=True,
    )
    result = LinearProgramSolver.solve_lp(lp)
    # x1 rises until x0 reaches its floor
    np.testing.assert_allclose(result.x, [-3.0, 4.0], atol=1e-10)
    assert result.objective == pytest.approx(5.0)


def test_infeasible():
    lp = LinearProgram(c=[1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[-1.0])
    with pytest.raises(InfeasibleLP):
        LinearProgramSolver.solve_lp(lp)


def test_unbounded():
    lp = LinearProgram(c=[1.0, 0.0], A_ub=[[1.0, -1.0]], b_ub=[1.0], maximize=True)
    with pytest.raises(UnboundedLP):
        LinearProgramSolver.solve_lp(lp)


def test_dimension_check():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0, 1.0], A_ub=[[1.0, 1.0, 1.0]], b_ub=[1.0])


@pytest.mark.parametrize('seed', range(8))
def test_agrees_with_scipy(seed):
    rng = np.random.default_rng(seed)
    n, m = 5, 4
    c = rng.normal(size=n)
    A = rng.uniform(0.1, 2.0, size=(m, n))
    b = rng.uniform(1.0, 5.0, size=m)
    lp = LinearProgram(c=c, A_ub=A, b_ub=b, ub=np.full(n, 3.0), maximize=True)
    ours = LinearProgramSolver.solve_lp(lp)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0.0, 3.0)] * n, method='highs')
    assert ref.status == 0
    assert ours.objective == pytest.approx(-ref.fun, abs=1e-8)
    assert lp.max_violation(ours.x) <= 1e-9


def test_enumeration_matches_simplex():
    lp = LinearProgram(c=[1.0, 1.0, -0.5], A_ub=[[1.0, 2.0, 1.0], [2.0, 1.0, 0.0]], b_ub=[4.0, 3.0], ub=[2.0, 2.0, 2.0], maximize=True)
    simplex = LinearProgramSolver.solve_lp(lp)
    enumerated = LinearProgramSolver.solve_by_enumeration(lp)
    assert simplex.objective == pytest.approx(enumerated.objective, abs=1e-12)


def test_slot_lp_prefers_fractional_mix():
    # IRS 2 is the most valuable but too slow alone; mixing with IRS 1 beats IRS 1 alone
    a, binary = LinearProgramSolver.solve_schedule_slot([1.0, 2.0, 3.0], [5.0, 5.0, 1.0], 3.0)
    np.testing.assert_allclose(a, [0.0, 0.5, 0.5])
    assert not binary


def test_slot_lp_binary_when_best_meets_threshold():
    a, binary = LinearProgramSolver.solve_schedule_slot([1.0, 4.0, 3.0], [5.0, 6.0, 1.0], 3.0)
    np.testing.assert_array_equal(a, [0.0, 1.0, 0.0])
    assert binary


def test_slot_lp_tie_goes_to_lowest_index():
    a, _ = LinearProgramSolver.solve_schedule_slot([2.0, 2.0], [5.0, 5.0], 3.0)
    np.testing.assert_array_equal(a, [1.0, 0.0])


def test_slot_lp_without_threshold():
    a, binary = LinearProgramSolver.solve_schedule_slot([0.3, 0.9, 0.1], [0.0, 0.0, 0.0], 0.0)
    np.testing.assert_array_equal(a, [0.0, 1.0, 0.0])
    assert binary


def test_slot_lp_infeasible():
    with pytest.raises(InfeasibleLP):
        LinearProgramSolver.solve_schedule_slot([1.0, 1.0], [2.0, 2.5], 3.0)


@pytest.mark.parametrize('seed', range(20))
def test_slot_lp_agrees_with_scipy(seed):
    rng = np.random.default_rng(100 + seed)
    K = int(rng.integers(2, 6))
    values = rng.uniform(0.0, 10.0, K)
    rates = rng.uniform(1.0, 8.0, K)
    r_th = float(rng.uniform(0.5, rates.max() * 0.99))
    a, _ = LinearProgramSolver.solve_schedule_slot(values, rates, r_th)
    ref = linprog(-values, A_ub=np.vstack([-rates, np.ones(K)]), b_ub=[-r_th, 1.0], bounds=[(0.0, 1.0)] * K, method='highs')
    assert ref.status == 0
    assert values @ a == pytest.approx(-ref.fun, rel=1e-7, abs=1e-8)
    assert a @ rates >= r_th - 1e-9
    assert a.sum() <= 1.0 + 1e-12
    # Same LP through the general simplex
    general = LinearProgramSolver.solve_lp(LinearProgramSolver.schedule_lp(values, rates, r_th))
    assert general.objective == pytest.approx(-ref.fun, rel=1e-7, abs=1e-8)
