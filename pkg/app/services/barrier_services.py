from typing import List, Optional, Tuple
import logging

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from app.config import runner_config
from app.errors import InfeasibleStart, LineSearchStall
from app.models.scenario import AlgorithmSettings
from app.models.solver import BarrierResult, SmoothConvexProgram, SolverStatus
from app.services.solver_dump_services import SolverDumpService

logger = logging.getLogger(__name__)

# Backtracking parameters (Armijo slope fraction and step shrink ratio)
_ARMIJO = 0.01
_SHRINK = 0.5
_MIN_STEP = 1e-16


def _dense(M) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


class _BarrierProblem:
    """Evaluates f, the stacked constraints and the barrier for one program"""

    def __init__(self, p: SmoothConvexProgram):
        self.p = p
        self.n = p.n

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        if not self.p.constraints:
            return np.zeros(0)
        return np.concatenate([np.atleast_1d(block.values(x)) for block in self.p.constraints])

    def is_strictly_feasible(self, x: np.ndarray) -> bool:
        g = self.constraint_values(x)
        return bool(np.all(np.isfinite(g)) and np.all(g < 0.0) and np.isfinite(self.p.objective(x)))

    def merit(self, x: np.ndarray, mu: float) -> float:
        """-f(x) - mu * sum log(-g(x)); +inf outside the domain"""
        g = self.constraint_values(x)
        if not (np.all(np.isfinite(g)) and np.all(g < 0.0)):
            return np.inf
        f = self.p.objective(x)
        if not np.isfinite(f):
            return np.inf
        return float(-f - mu * np.sum(np.log(-g)))

    def derivatives(self, x: np.ndarray, mu: float) -> Tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of the barrier merit function"""
        grad = -np.asarray(self.p.gradient(x), dtype=float)
        hess = -_dense(self.p.hessian(x))
        for block in self.p.constraints:
            g = np.atleast_1d(block.values(x))
            inv = 1.0 / (-g)
            J = block.jacobian(x)
            J = J if sp.issparse(J) else sp.csr_matrix(np.atleast_2d(J))
            grad += mu * (J.T @ inv)
            hess += mu * _dense(J.T @ sp.diags(inv ** 2) @ J)
            if block.hessian is not None:
                hess += mu * _dense(block.hessian(x, inv))
        return grad, hess


class BarrierSolver:
    """Log-barrier method with damped Newton centering for smooth convex programs"""

    @staticmethod
    def is_strictly_feasible(p: SmoothConvexProgram) -> bool:
        """True when every constraint is strictly negative and the objective is finite at x0"""
        return _BarrierProblem(p).is_strictly_feasible(np.asarray(p.x0, dtype=float))

    @staticmethod
    def _newton_direction(hess: np.ndarray, grad: np.ndarray, A_eq: Optional[np.ndarray]) -> np.ndarray:
        n = grad.size
        if A_eq is None:
            reg = 0.0
            scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
            for _ in range(12):
                try:
                    factor = scipy.linalg.cho_factor(hess + reg * np.eye(n), check_finite=False)
                    return scipy.linalg.cho_solve(factor, -grad, check_finite=False)
                except scipy.linalg.LinAlgError:
                    reg = 1e-14 * scale if reg == 0.0 else reg * 100.0
            return np.linalg.lstsq(hess, -grad, rcond=None)[0]

        p = A_eq.shape[0]
        kkt = np.block([[hess, A_eq.T], [A_eq, np.zeros((p, p))]])
        rhs = np.concatenate([-grad, np.zeros(p)])
        return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n]

    @staticmethod
    def _spot_check_convexity(problem: _BarrierProblem, x: np.ndarray, rng: np.random.Generator) -> List[str]:
        """Second differences along random directions; concave objective and convex constraints expected"""
        issues = []
        eps = 1e-4 * max(1.0, float(np.max(np.abs(x))))
        for _ in range(5):
            d = rng.standard_normal(x.size)
            d /= np.linalg.norm(d)
            up, down = x + eps * d, x - eps * d
            for block in problem.p.constraints:
                second = block.values(up) + block.values(down) - 2.0 * block.values(x)
                if np.any(second < -1e-9 * np.maximum(1.0, np.abs(block.values(x)))):
                    issues.append(block.name)
            f_second = problem.p.objective(up) + problem.p.objective(down) - 2.0 * problem.p.objective(x)
            if np.isfinite(f_second) and f_second > 1e-9 * max(1.0, abs(problem.p.objective(x))):
                issues.append('objective')
        return sorted(set(issues))

    @staticmethod
    def solve_sca_subproblem(p: SmoothConvexProgram, settings: Optional[AlgorithmSettings] = None) -> BarrierResult:
        """
        Maximise a concave objective over a convex set with the log-barrier method.

        The barrier weight starts at barrier_mu0 and is divided by barrier_factor until
        m * mu <= barrier_tol; each stage is centred with damped Newton steps and a
        backtracking line search that keeps every iterate strictly feasible.

        Args:
            p: Program with a strictly feasible x0
            settings: Tolerances (defaults to AlgorithmSettings())

        Returns:
            BarrierResult: Final iterate and solve statistics

        Raises:
            InfeasibleStart: If x0 is not strictly feasible
            LineSearchStall: If Newton steps stop making progress away from a centred point
        """
        settings = settings or AlgorithmSettings()
        problem = _BarrierProblem(p)
        x = np.array(p.x0, dtype=float)

        if not problem.is_strictly_feasible(x):
            g = problem.constraint_values(x)
            worst = float(np.max(g)) if g.size else float('nan')
            raise InfeasibleStart(f"{p.name}: start point is not strictly feasible (max g = {worst:.3e})")
        if p.A_eq is not None and np.max(np.abs(p.A_eq @ x - p.b_eq)) > 1e-8:
            raise InfeasibleStart(f"{p.name}: start point violates the equality constraints")

        if runner_config.check_convexity:
            issues = BarrierSolver._spot_check_convexity(problem, x, np.random.default_rng(0))
            if issues:
                logger.warning(f"{p.name}: convexity spot check failed for {issues}")
        if runner_config.debug_dump:
            g0 = problem.constraint_values(x)
            SolverDumpService.dump_problem(f"barrier_{p.name}", {'x0': x, 'g0': g0})

        m = problem.constraint_values(x).size
        mu = settings.barrier_mu0
        steps = 0
        stages = 0
        status = SolverStatus.OPTIMAL

        while True:
            stages += 1
            for _ in range(settings.max_newton_iter):
                grad, hess = problem.derivatives(x, mu)
                dx = BarrierSolver._newton_direction(hess, grad, p.A_eq)
                decrement_sq = float(-grad @ dx)
                # Decrement of f/mu - sum log(-g), so centring keeps pace with mu
                if decrement_sq / 2.0 <= settings.newton_tol * mu:
                    break

                current = problem.merit(x, mu)
                t = 1.0
                accepted = False
                while t >= _MIN_STEP:
                    trial = x + t * dx
                    value = problem.merit(trial, mu)
                    if value <= current + _ARMIJO * t * float(grad @ dx):
                        accepted = True
                        break
                    t *= _SHRINK
                steps += 1

                if not accepted:
                    if decrement_sq <= 1e-6 * max(1.0, abs(current)):
                        # Round-off floor: treat the point as centred
                        break
                    logger.warning(f"{p.name}: line search stalled at mu={mu:.3e}, decrement^2={decrement_sq:.3e}")
                    raise LineSearchStall(f"{p.name}: line search stalled at mu={mu:.3e}", best_x=x.copy())
                x = trial
            else:
                status = SolverStatus.STALLED
                logger.debug(f"{p.name}: centring hit {settings.max_newton_iter} Newton steps at mu={mu:.3e}")

            if m == 0 or m * mu <= settings.barrier_tol:
                break
            mu /= settings.barrier_factor

        objective = float(p.objective(x))
        logger.debug(f"{p.name}: {stages} barrier stages, {steps} Newton steps, objective {objective:.12g}")
        return BarrierResult(
            x=x,
            objective=objective,
            status=status,
            newton_steps=steps,
            barrier_stages=stages,
            gap_bound=m * mu,
        )


__all__ = ['BarrierSolver']
