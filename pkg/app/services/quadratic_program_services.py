from typing import Tuple
import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from app.errors import QPInfeasible
from app.models.solver import QPResult, QuadraticProgram, SolverStatus
from app.services.solver_dump_services import SolverDumpService

logger = logging.getLogger(__name__)

_STEP_TO_BOUNDARY = 0.995
_MAX_ITER = 200


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha in (0, 1] keeping v + alpha*dv >= 0"""
    shrinking = dv < 0
    if not np.any(shrinking):
        return 1.0
    return float(min(1.0, np.min(-v[shrinking] / dv[shrinking])))


class QuadraticProgramSolver:
    """Mehrotra predictor-corrector interior point method for convex QPs with linear inequalities"""

    @staticmethod
    def _inequalities(qp: QuadraticProgram) -> Tuple[sp.csr_matrix, np.ndarray, np.ndarray, np.ndarray]:
        """Stack G x <= h with the finite bounds; also return the row masks of the bound rows"""
        n = qp.n
        blocks, rhs = [], []
        if qp.G is not None:
            blocks.append(sp.csr_matrix(qp.G))
            rhs.append(qp.h)
        m_general = sum(b.shape[0] for b in blocks)

        lb = qp.lb if qp.lb is not None else np.full(n, -np.inf)
        ub = qp.ub if qp.ub is not None else np.full(n, np.inf)
        lower_idx = np.flatnonzero(np.isfinite(lb))
        upper_idx = np.flatnonzero(np.isfinite(ub))
        if lower_idx.size:
            blocks.append(sp.csr_matrix((-np.ones(lower_idx.size), (np.arange(lower_idx.size), lower_idx)),
                                        shape=(lower_idx.size, n)))
            rhs.append(-lb[lower_idx])
        if upper_idx.size:
            blocks.append(sp.csr_matrix((np.ones(upper_idx.size), (np.arange(upper_idx.size), upper_idx)),
                                        shape=(upper_idx.size, n)))
            rhs.append(ub[upper_idx])

        if not blocks:
            return sp.csr_matrix((0, n)), np.zeros(0), lower_idx, upper_idx
        G = sp.vstack(blocks, format='csr')
        h = np.concatenate(rhs)
        logger.debug(f"QP with {n} variables, {m_general} general rows, {G.shape[0] - m_general} bound rows")
        return G, h, lower_idx, upper_idx

    @staticmethod
    def _factor(M: np.ndarray):
        """Cholesky of the reduced KKT matrix with growing diagonal regularisation"""
        reg = 0.0
        scale = max(1.0, float(np.max(np.abs(np.diag(M)))))
        for _ in range(12):
            try:
                return scipy.linalg.cho_factor(M + reg * np.eye(M.shape[0]), check_finite=False)
            except scipy.linalg.LinAlgError:
                reg = 1e-14 * scale if reg == 0.0 else reg * 100.0
        raise np.linalg.LinAlgError("reduced KKT matrix is not positive definite")

    @staticmethod
    def solve_qp_linear(qp: QuadraticProgram, tol: float = 1e-10) -> QPResult:
        """
        Minimise a convex quadratic subject to linear inequalities.

        Args:
            qp: Quadratic program (Q positive semidefinite)
            tol: Residual and complementarity tolerance on the scaled problem

        Returns:
            QPResult: KKT point; variables within 1e-9 of a finite bound are snapped onto it

        Raises:
            QPInfeasible: If the primal residual cannot be driven to zero
        """
        SolverDumpService.dump_problem('qp', {'Q': qp.Q, 'c': qp.c, 'G': qp.G, 'h': qp.h, 'lb': qp.lb, 'ub': qp.ub})
        n = qp.n
        G, h, lower_idx, upper_idx = QuadraticProgramSolver._inequalities(qp)
        m = G.shape[0]

        scale = max(1.0, float(np.max(np.abs(qp.Q), initial=0.0)), float(np.max(np.abs(qp.c), initial=0.0)))
        Q = qp.Q / scale
        c = qp.c / scale

        if m == 0:
            x = np.linalg.lstsq(Q, -c, rcond=None)[0]
            stationarity = float(np.max(np.abs(Q @ x + c), initial=0.0))
            return QPResult(x=x, objective=qp.objective(x), multipliers=np.zeros(0), stationarity=stationarity)

        x = np.zeros(n)
        s = np.maximum(h - G @ x, 1.0)
        lam = np.ones(m)
        h_norm = 1.0 + float(np.max(np.abs(h)))
        c_norm = 1.0 + float(np.max(np.abs(c)))
        GT = G.T.tocsr()

        status = SolverStatus.STALLED
        iteration = 0
        for iteration in range(1, _MAX_ITER + 1):
            r_d = Q @ x + c + GT @ lam
            r_p = G @ x + s - h
            mu = float(s @ lam) / m
            if (np.max(np.abs(r_d)) <= tol * c_norm and np.max(np.abs(r_p)) <= tol * h_norm and mu <= tol):
                status = SolverStatus.OPTIMAL
                break

            M = Q + (GT @ sp.diags(lam / s) @ G).toarray()
            try:
                factor = QuadraticProgramSolver._factor(M)
            except np.linalg.LinAlgError as e:
                logger.warning(f"QP iteration {iteration}: {e}")
                break

            def direction(r_c: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
                rhs = -r_d - GT @ ((-r_c + lam * r_p) / s)
                dx = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
                ds = -r_p - G @ dx
                dlam = (-r_c - lam * ds) / s
                return dx, ds, dlam

            # Predictor
            dx, ds, dlam = direction(s * lam)
            alpha_aff = min(_max_step(s, ds), _max_step(lam, dlam))
            mu_aff = float((s + alpha_aff * ds) @ (lam + alpha_aff * dlam)) / m
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

            # Corrector
            dx, ds, dlam = direction(s * lam + ds * dlam - sigma * mu)
            alpha = min(1.0, _STEP_TO_BOUNDARY * min(_max_step(s, ds), _max_step(lam, dlam)))

            x = x + alpha * dx
            s = np.maximum(s + alpha * ds, 1e-300)
            lam = np.maximum(lam + alpha * dlam, 1e-300)

        if not np.all(np.isfinite(x)):
            raise QPInfeasible("QP iterates diverged")
        primal_gap = float(np.max(np.maximum(G @ x - h, 0.0), initial=0.0))
        if status != SolverStatus.OPTIMAL and primal_gap > 1e-6 * h_norm:
            logger.error(f"QP infeasible after {iteration} iterations, residual {primal_gap:.3e}")
            raise QPInfeasible(f"QP is infeasible (primal violation {primal_gap:.3e})")
        if status != SolverStatus.OPTIMAL:
            logger.warning(f"QP stopped after {iteration} iterations without meeting tolerance {tol}")

        # Snap variables sitting on finite bounds
        if qp.lb is not None:
            near = lower_idx[np.abs(x[lower_idx] - qp.lb[lower_idx]) <= 1e-9 * np.maximum(1.0, np.abs(qp.lb[lower_idx]))]
            x[near] = qp.lb[near]
        if qp.ub is not None:
            near = upper_idx[np.abs(x[upper_idx] - qp.ub[upper_idx]) <= 1e-9 * np.maximum(1.0, np.abs(qp.ub[upper_idx]))]
            x[near] = qp.ub[near]

        stationarity = float(np.max(np.abs(Q @ x + c + GT @ lam)))
        result = QPResult(
            x=x,
            objective=qp.objective(x),
            multipliers=lam * scale,
            stationarity=stationarity,
            status=status,
            iterations=iteration,
        )
        logger.debug(f"QP finished in {iteration} iterations, objective {result.objective:.12g}, status {status.value}")
        return result


__all__ = ['QuadraticProgramSolver']
