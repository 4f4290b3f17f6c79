from typing import List, Optional, Tuple
from itertools import combinations
import logging

import numpy as np

from app.errors import InfeasibleLP, SolverError, UnboundedLP
from app.models.solver import LinearProgram, LPResult, SolverStatus
from app.services.solver_dump_services import SolverDumpService

logger = logging.getLogger(__name__)

_PIVOT_TOL = 1e-12


class _StandardForm:
    """min c^T y  s.t.  A y = b,  y >= 0,  b >= 0,  with x = D y + offset"""

    def __init__(self, lp: LinearProgram):
        n = lp.n
        lower, upper = lp.lower(), lp.upper()
        cost = -lp.c if lp.maximize else lp.c

        columns: List[np.ndarray] = []
        offset = np.zeros(n)
        bound_rows: List[Tuple[int, float]] = []
        for j in range(n):
            unit = np.zeros(n)
            unit[j] = 1.0
            if np.isfinite(lower[j]):
                offset[j] = lower[j]
                columns.append(unit)
                if np.isfinite(upper[j]):
                    bound_rows.append((len(columns) - 1, upper[j] - lower[j]))
            elif np.isfinite(upper[j]):
                offset[j] = upper[j]
                columns.append(-unit)
            else:
                columns.append(unit)
                columns.append(-unit)
        D = np.column_stack(columns)
        n_y = D.shape[1]

        ineq_A, ineq_b = [], []
        if lp.A_ub is not None:
            ineq_A.append(lp.A_ub @ D)
            ineq_b.append(lp.b_ub - lp.A_ub @ offset)
        for col, width in bound_rows:
            row = np.zeros((1, n_y))
            row[0, col] = 1.0
            ineq_A.append(row)
            ineq_b.append(np.array([width]))
        A_in = np.vstack(ineq_A) if ineq_A else np.zeros((0, n_y))
        b_in = np.concatenate(ineq_b) if ineq_b else np.zeros(0)

        if lp.A_eq is not None:
            A_eq = lp.A_eq @ D
            b_eq = lp.b_eq - lp.A_eq @ offset
        else:
            A_eq, b_eq = np.zeros((0, n_y)), np.zeros(0)

        m_in, m_eq = A_in.shape[0], A_eq.shape[0]
        self.A = np.block([
            [A_in, np.eye(m_in)],
            [A_eq, np.zeros((m_eq, m_in))],
        ]) if (m_in + m_eq) else np.zeros((0, n_y))
        self.b = np.concatenate([b_in, b_eq])
        negative = self.b < 0
        self.A[negative] *= -1.0
        self.b[negative] *= -1.0

        self.c = np.concatenate([D.T @ cost, np.zeros(m_in)])
        self.D = D
        self.offset = offset
        self.n_y = n_y

    def recover(self, y: np.ndarray) -> np.ndarray:
        return self.D @ y[: self.n_y] + self.offset


class LinearProgramSolver:
    """Dense two-phase tableau simplex with Bland's rule, plus exact vertex enumeration"""

    @staticmethod
    def _pivot(T: np.ndarray, row: int, col: int) -> None:
        T[row] /= T[row, col]
        others = np.arange(T.shape[0]) != row
        T[others] -= np.outer(T[others, col], T[row])

    @staticmethod
    def _run_simplex(T: np.ndarray, basis: List[int], cost: np.ndarray, allowed: np.ndarray, tol: float) -> int:
        """
        Bland's-rule simplex on tableau T (rows [B^-1 A | B^-1 b]), minimising cost.

        Returns:
            int: Pivots performed

        Raises:
            UnboundedLP: If an improving column has no positive entry
        """
        m = T.shape[0]
        max_pivots = 50 * (T.shape[1] + m) + 100
        for pivots in range(max_pivots):
            reduced = cost - cost[basis] @ T[:, :-1]
            candidates = np.flatnonzero(allowed & (reduced < -tol))
            if candidates.size == 0:
                return pivots
            col = int(candidates[0])

            column = T[:, col]
            rows = np.flatnonzero(column > _PIVOT_TOL)
            if rows.size == 0:
                raise UnboundedLP(f"LP is unbounded along column {col}")
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: basis[r]))

            LinearProgramSolver._pivot(T, row, col)
            basis[row] = col
        raise SolverError(f"simplex did not terminate within {max_pivots} pivots")

    @staticmethod
    def solve_lp(lp: LinearProgram, tol: float = 1e-9) -> LPResult:
        """
        Solve a small dense LP to optimality.

        Args:
            lp: Linear program
            tol: Optimality / feasibility tolerance

        Returns:
            LPResult: Optimal vertex, objective in the LP's own sense

        Raises:
            InfeasibleLP: If no point satisfies the constraints
            UnboundedLP: If the objective is unbounded
        """
        SolverDumpService.dump_problem('lp', {
            'c': lp.c, 'A_ub': lp.A_ub, 'b_ub': lp.b_ub, 'A_eq': lp.A_eq, 'b_eq': lp.b_eq,
            'lb': lp.lb, 'ub': lp.ub,
        })
        sf = _StandardForm(lp)
        m, n_cols = sf.A.shape

        if m == 0:
            if np.any(sf.c < -tol):
                raise UnboundedLP("LP has no constraints and an improving direction")
            y = np.zeros(n_cols)
            x = sf.recover(y)
            return LPResult(x=x, objective=lp.objective(x), iterations=0)

        # Phase 1: one artificial variable per row
        T = np.hstack([sf.A, np.eye(m), sf.b[:, None]])
        basis = list(range(n_cols, n_cols + m))
        phase1_cost = np.concatenate([np.zeros(n_cols), np.ones(m)])
        allowed = np.ones(n_cols + m, dtype=bool)
        pivots = LinearProgramSolver._run_simplex(T, basis, phase1_cost, allowed, tol)

        infeasibility = float(phase1_cost[basis] @ T[:, -1])
        if infeasibility > tol * max(1.0, float(np.max(np.abs(sf.b)))):
            logger.debug(f"LP phase 1 ended with residual {infeasibility:.3e}")
            raise InfeasibleLP(f"LP is infeasible (phase-1 residual {infeasibility:.3e})")

        # Drive artificials out of the basis; rows where that is impossible are redundant
        keep = []
        for i in range(m):
            if basis[i] < n_cols:
                keep.append(i)
                continue
            entries = np.flatnonzero(np.abs(T[i, :n_cols]) > 1e-9)
            if entries.size:
                LinearProgramSolver._pivot(T, i, int(entries[0]))
                basis[i] = int(entries[0])
                keep.append(i)
        T = T[keep]
        basis = [basis[i] for i in keep]

        # Phase 2 on the original columns
        phase2_cost = np.concatenate([sf.c, np.zeros(m)])
        allowed = np.concatenate([np.ones(n_cols, dtype=bool), np.zeros(m, dtype=bool)])
        pivots += LinearProgramSolver._run_simplex(T, basis, phase2_cost, allowed, tol)

        y = np.zeros(n_cols + m)
        y[basis] = T[:, -1]
        x = sf.recover(np.maximum(y, 0.0))
        result = LPResult(x=x, objective=lp.objective(x), status=SolverStatus.OPTIMAL, iterations=pivots)
        logger.debug(f"LP solved in {pivots} pivots, objective {result.objective:.12g}")
        return result

    @staticmethod
    def enumerate_vertices(lp: LinearProgram, tol: float = 1e-9) -> List[np.ndarray]:
        """
        All vertices of the feasible set by brute force over active-constraint subsets.

        Only meant for small problems (tests and per-slot checks).
        """
        n = lp.n
        rows, rhs = [], []
        if lp.A_ub is not None:
            rows.extend(lp.A_ub)
            rhs.extend(lp.b_ub)
        lower, upper = lp.lower(), lp.upper()
        for j in range(n):
            unit = np.zeros(n)
            unit[j] = 1.0
            if np.isfinite(lower[j]):
                rows.append(-unit)
                rhs.append(-lower[j])
            if np.isfinite(upper[j]):
                rows.append(unit)
                rhs.append(upper[j])
        G = np.array(rows).reshape(-1, n)
        h = np.array(rhs, dtype=float)
        A_eq = lp.A_eq if lp.A_eq is not None else np.zeros((0, n))
        b_eq = lp.b_eq if lp.b_eq is not None else np.zeros(0)

        need = n - A_eq.shape[0]
        vertices: List[np.ndarray] = []
        if need < 0:
            return vertices
        for subset in combinations(range(G.shape[0]), need):
            system = np.vstack([A_eq, G[list(subset)]])
            if np.linalg.matrix_rank(system) < n:
                continue
            x = np.linalg.solve(system, np.concatenate([b_eq, h[list(subset)]]))
            if lp.max_violation(x) <= tol * max(1.0, float(np.max(np.abs(x), initial=0.0))):
                if not any(np.allclose(x, v, atol=1e-12, rtol=1e-10) for v in vertices):
                    vertices.append(x)
        return vertices

    @staticmethod
    def solve_by_enumeration(lp: LinearProgram, tol: float = 1e-9) -> LPResult:
        """
        Best vertex of a bounded LP; ties go to the first vertex found.

        Raises:
            InfeasibleLP: If there is no vertex
        """
        vertices = LinearProgramSolver.enumerate_vertices(lp, tol)
        if not vertices:
            raise InfeasibleLP("LP has no feasible vertex")
        sign = 1.0 if lp.maximize else -1.0
        best = vertices[0]
        for v in vertices[1:]:
            if sign * (lp.objective(v) - lp.objective(best)) > tol * max(1.0, abs(lp.objective(best))):
                best = v
        return LPResult(x=best, objective=lp.objective(best), iterations=len(vertices))

    @staticmethod
    def schedule_lp(values: np.ndarray, rates: np.ndarray, r_th: float) -> LinearProgram:
        """Per-slot association LP: max v.a  s.t.  r.a >= r_th,  sum a <= 1,  0 <= a <= 1"""
        K = len(values)
        return LinearProgram(
            c=values,
            A_ub=np.vstack([-np.asarray(rates, dtype=float), np.ones(K)]),
            b_ub=np.array([-r_th, 1.0]),
            lb=np.zeros(K),
            ub=np.ones(K),
            maximize=True,
        )

    @staticmethod
    def schedule_candidates(rates: np.ndarray, r_th: float) -> List[np.ndarray]:
        """
        Every vertex of the per-slot association polytope, in tie-breaking order:
        no association, each single IRS, each single IRS at the rate boundary,
        then each pair mixing to exactly the rate threshold with a full slot.
        """
        K = len(rates)
        out: List[np.ndarray] = [np.zeros(K)]
        for k in range(K):
            e = np.zeros(K)
            e[k] = 1.0
            out.append(e)
        if r_th > 0:
            for k in range(K):
                if rates[k] > r_th:
                    a = np.zeros(K)
                    a[k] = r_th / rates[k]
                    out.append(a)
            for i, j in combinations(range(K), 2):
                gap = rates[i] - rates[j]
                if abs(gap) <= _PIVOT_TOL * max(1.0, abs(rates[i])):
                    continue
                ai = (r_th - rates[j]) / gap
                if 0.0 < ai < 1.0:
                    a = np.zeros(K)
                    a[i], a[j] = ai, 1.0 - ai
                    out.append(a)
        return out

    @staticmethod
    def solve_schedule_slot(values: np.ndarray, rates: np.ndarray, r_th: float, tol: float = 1e-9) -> Tuple[np.ndarray, bool]:
        """
        Exact solution of the per-slot association LP by vertex enumeration.

        Args:
            values: Per-IRS objective weights w_k * F(gamma_k)
            rates: Per-IRS primary rates R_{u,k}
            r_th: Rate threshold

        Returns:
            (a, binary): Optimal association and whether it is binary

        Raises:
            InfeasibleLP: If no association meets the rate threshold
        """
        values = np.asarray(values, dtype=float)
        rates = np.asarray(rates, dtype=float)
        slack = 1e-12 * max(1.0, abs(r_th))
        best: Optional[np.ndarray] = None
        best_value = -np.inf
        for a in LinearProgramSolver.schedule_candidates(rates, r_th):
            if a @ rates < r_th - slack or a.sum() > 1.0 + 1e-12:
                continue
            value = float(values @ a)
            if best is None or value > best_value + tol * max(1.0, abs(best_value)):
                best, best_value = a, value
        if best is None:
            raise InfeasibleLP(f"rate threshold {r_th} exceeds every rate (max {rates.max(initial=0.0):.6g})")
        binary = bool(np.all(np.minimum(best, 1.0 - best) <= 1e-12))
        return best, binary


__all__ = ['LinearProgramSolver']
