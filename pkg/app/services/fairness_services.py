from typing import Any, Dict, List, Tuple, Union
import logging
import time

import numpy as np

from app.errors import Infeasible, InfeasibleSlot, QPInfeasible
from app.models.channel import LinkState
from app.models.report import OuterRecord, PenaltyState, SolveReport, SolveStatus
from app.models.scenario import Scenario
from app.models.solver import LinearProgram, QuadraticProgram
from app.models.trajectory import PhaseSchedule, Schedule, Trajectory
from app.services.channel_services import ChannelService
from app.services.closed_form_services import ClosedFormService
from app.services.linear_program_services import LinearProgramSolver
from app.services.quadratic_program_services import QuadraticProgramSolver
from app.services.sca_services import FAIR, ScaTrajectoryService
from app.services.weighted_sum_services import RATE_TOL, WeightedSumService

logger = logging.getLogger(__name__)

ScheduleLike = Union[Schedule, np.ndarray]


def _matrix(sched: ScheduleLike) -> np.ndarray:
    return sched.a if isinstance(sched, Schedule) else np.asarray(sched, dtype=float)


class FairnessService:
    """Penalty-based design for the max-min IRS utility"""

    @staticmethod
    def update_a_bar(a: np.ndarray) -> np.ndarray:
        """Minimiser of a^2 (1 - a_bar)^2 + (a - a_bar)^2 over a_bar: (a + a^2) / (1 + a^2)"""
        a = np.asarray(a, dtype=float)
        return (a + a ** 2) / (1.0 + a ** 2)

    @staticmethod
    def penalty_value(a: np.ndarray, a_bar: np.ndarray) -> float:
        """sum of a^2 (1 - a_bar)^2 + (a - a_bar)^2"""
        a = np.asarray(a, dtype=float)
        a_bar = np.asarray(a_bar, dtype=float)
        return float(np.sum(a ** 2 * (1.0 - a_bar) ** 2 + (a - a_bar) ** 2))

    @staticmethod
    def violation(a: np.ndarray, a_bar: np.ndarray) -> float:
        """xi = max over entries of max(|a (1 - a_bar)|, |a - a_bar|)"""
        a = np.asarray(a, dtype=float)
        a_bar = np.asarray(a_bar, dtype=float)
        return float(max(np.max(np.abs(a * (1.0 - a_bar))), np.max(np.abs(a - a_bar))))

    @staticmethod
    def average_utilities(s: Scenario, utilities: np.ndarray, a: np.ndarray) -> np.ndarray:
        """(1/N) * sum_n a_k[n] * F_k[n] for every IRS"""
        return np.sum(a * utilities, axis=1) / s.N

    @staticmethod
    def fairness_objective(s: Scenario, traj: Trajectory, sched: ScheduleLike) -> float:
        """min_k of the average utility of IRS k"""
        ls = ChannelService.link_state(s, traj)
        return float(np.min(FairnessService.average_utilities(s, ClosedFormService.utility_table(ls, s), _matrix(sched))))

    @staticmethod
    def _check_slots(s: Scenario, rates: np.ndarray) -> None:
        short = np.flatnonzero(np.max(rates, axis=0) < s.R_th)
        if short.size:
            n = int(short[0])
            logger.error(f"Slot {n}: best rate {np.max(rates[:, n]):.6g} is below R_th={s.R_th}")
            raise InfeasibleSlot(n)

    @staticmethod
    def schedule_penalty_subproblem(s: Scenario, ls: LinkState, a_bar: np.ndarray, eta: float) -> Tuple[np.ndarray, float]:
        """
        Penalised association QP for a fixed trajectory.

        minimise -R + (1/(2*eta)) * sum[a^2 (1 - a_bar)^2 + (a - a_bar)^2]
        s.t. per-slot sum_k a <= 1, per-slot rate >= R_th, per-IRS average utility >= R, 0 <= a <= 1.

        Args:
            s: Scenario
            ls: Link state of the current trajectory
            a_bar: (K, N) auxiliary schedule
            eta: Penalty coefficient

        Returns:
            Tuple[np.ndarray, float]: Schedule matrix and fairness level R

        Raises:
            InfeasibleSlot: If a slot cannot meet R_th with any IRS
            Infeasible: If the QP has no feasible point
        """
        if eta <= 0:
            raise ValueError(f"eta must be positive, got {eta}")
        K, N = s.K, s.N
        a_bar = np.asarray(a_bar, dtype=float)
        utilities = ClosedFormService.utility_table(ls, s)
        rates = ClosedFormService.rate_table(ls, s)
        FairnessService._check_slots(s, rates)

        n_a = K * N
        flat_bar = a_bar.ravel()
        Q = np.concatenate([((1.0 - flat_bar) ** 2 + 1.0) / eta, [0.0]])
        c = np.concatenate([-flat_bar / eta, [-1.0]])

        rows, rhs = [], []
        slot_sum = np.zeros((N, n_a + 1))
        for n in range(N):
            slot_sum[n, np.arange(K) * N + n] = 1.0
        rows.append(slot_sum)
        rhs.append(np.ones(N))
        if s.R_th > 0:
            rate_rows = np.zeros((N, n_a + 1))
            for n in range(N):
                rate_rows[n, np.arange(K) * N + n] = -rates[:, n]
            rows.append(rate_rows)
            rhs.append(np.full(N, -s.R_th))
        fair_rows = np.zeros((K, n_a + 1))
        for k in range(K):
            fair_rows[k, k * N:(k + 1) * N] = -utilities[k] / N
        fair_rows[:, -1] = 1.0
        rows.append(fair_rows)
        rhs.append(np.zeros(K))

        qp = QuadraticProgram(
            Q=Q,
            c=c,
            G=np.vstack(rows),
            h=np.concatenate(rhs),
            lb=np.concatenate([np.zeros(n_a), [-np.inf]]),
            ub=np.concatenate([np.ones(n_a), [np.inf]]),
        )
        try:
            result = QuadraticProgramSolver.solve_qp_linear(qp, s.algo.qp_tol)
        except QPInfeasible as e:
            logger.error(f"Penalty scheduling QP failed at eta={eta:.3e}: {e}")
            raise Infeasible(f"penalty scheduling problem is infeasible: {e}") from e

        a = np.clip(result.x[:n_a], 0.0, 1.0).reshape(K, N)
        # Level consistent with the clipped schedule
        R = float(min(result.x[-1], np.min(FairnessService.average_utilities(s, utilities, a))))
        return a, R

    @staticmethod
    def snap_to_binary(s: Scenario, ls: LinkState, a: np.ndarray, tol: float) -> np.ndarray:
        """
        Move schedule entries within tol of 0 or 1 onto that bound.

        Snapping is done per slot; a slot keeps its unsnapped column when the snapped one
        would exceed one IRS in total or fall short of R_th.

        Args:
            s: Scenario
            ls: Link state the schedule was computed for
            a: (K, N) schedule from the penalised QP
            tol: Snap distance

        Returns:
            np.ndarray: Schedule with near-binary slots made exactly binary
        """
        a = np.clip(np.asarray(a, dtype=float), 0.0, 1.0)
        if tol <= 0.0:
            return a
        snapped = np.where(a <= tol, 0.0, np.where(a >= 1.0 - tol, 1.0, a))
        fits = snapped.sum(axis=0) <= 1.0 + RATE_TOL
        if s.R_th > 0:
            rate = np.sum(snapped * ClosedFormService.rate_table(ls, s), axis=0)
            fits &= rate >= s.R_th - RATE_TOL
        changed = np.any(snapped != a, axis=0)
        if np.any(changed & ~fits):
            logger.debug(f"Kept {int(np.count_nonzero(changed & ~fits))} slots unsnapped to hold the slot constraints")
        return np.where(fits[None, :], snapped, a)

    @staticmethod
    def trajectory_penalty_subproblem(s: Scenario, a: np.ndarray, q_prev: Trajectory) -> Tuple[Trajectory, float]:
        """
        Raise the max-min utility by moving the UAV, schedule fixed.

        Returns:
            Tuple[Trajectory, float]: Accepted trajectory and its min_k average utility
        """
        a = np.asarray(a, dtype=float)

        def objective(t: Trajectory) -> float:
            return FairnessService.fairness_objective(s, t, a)

        traj, _ = ScaTrajectoryService.refine(s, a, q_prev, FAIR, objective)
        return traj, objective(traj)

    @staticmethod
    def rounding_diagnostic(s: Scenario, ls: LinkState, a: np.ndarray) -> List[Dict[str, Any]]:
        """
        Report, per slot, what rounding a relaxed schedule to its largest entry does to the primary rate.

        A slot is rounded to IRS argmax_k a_k[n] when that entry is at least 0.5, else to no IRS.
        """
        a = np.asarray(a, dtype=float)
        rates = ClosedFormService.rate_table(ls, s)
        out = []
        for n in range(s.N):
            k = int(np.argmax(a[:, n]))
            chosen = k if a[k, n] >= 0.5 else None
            relaxed_rate = float(a[:, n] @ rates[:, n])
            rounded_rate = float(rates[k, n]) if chosen is not None else 0.0
            out.append({
                'slot': n,
                'rounded_irs': chosen,
                'relaxed_rate': relaxed_rate,
                'rounded_rate': rounded_rate,
                'violates': rounded_rate < s.R_th - RATE_TOL,
            })
        violating = sum(row['violates'] for row in out)
        if violating:
            logger.info(f"Rounding the relaxed schedule breaks the rate threshold in {violating} slots")
        return out

    @staticmethod
    def _inner_objective(R: float, a: np.ndarray, a_bar: np.ndarray, eta: float) -> float:
        return -R + FairnessService.penalty_value(a, a_bar) / (2.0 * eta)

    @staticmethod
    def run_fairness(s: Scenario) -> Tuple[Trajectory, Schedule, PhaseSchedule, SolveReport]:
        """
        Two-layer penalty method.

        The inner layer alternates the a_bar update, the penalised QP and the trajectory SCA
        until the fractional decrease of the penalised objective is below eps1; the outer
        layer shrinks eta = eta0 * c^t until xi <= eps2 or the outer cap is reached.

        QP schedules are snapped onto {0, 1} where they lie within binary_snap_tol, since the
        interior-point iterates cannot reach a bound whose multiplier vanishes. xi is measured
        between the schedule and the a_bar that entered its penalty.

        Args:
            s: Scenario

        Returns:
            Tuple of the final trajectory, rounded binary schedule, optimal phases and the solve report.
            The report status is NonConverged when xi stalls above eps2 or the QP turns
            infeasible after a shrink.

        Raises:
            Infeasible: If the very first penalised subproblem is infeasible
        """
        started = time.perf_counter()
        algo = s.algo
        logger.info(f"Fairness design on '{s.name}': K={s.K}, N={s.N}, M={s.M}")
        report = SolveReport(algorithm='fair')

        traj = WeightedSumService.initial_trajectory(s)
        a0 = Schedule.uniform(s.K, s.N).a
        state = PenaltyState(eta=algo.eta0, a=a0, a_bar=FairnessService.update_a_bar(a0))
        status = SolveStatus.NON_CONVERGED
        stop = False

        for outer in range(algo.outer_cap):
            state.eta = algo.eta0 * algo.c_scale ** outer
            state.outer_iter = outer + 1
            previous = None
            inner_count = 0
            for r in range(1, algo.r_max + 1):
                a_bar = FairnessService.update_a_bar(state.a)
                ls = ChannelService.link_state(s, traj)
                try:
                    a, _ = FairnessService.schedule_penalty_subproblem(s, ls, a_bar, state.eta)
                except Infeasible:
                    if outer == 0 and r == 1:
                        raise
                    logger.error(f"Penalised QP infeasible at eta={state.eta:.3e}; keeping the previous iterate")
                    stop = True
                    break
                a = FairnessService.snap_to_binary(s, ls, a, algo.binary_snap_tol)
                traj, R = FairnessService.trajectory_penalty_subproblem(s, a, traj)
                state.a, state.a_bar, state.R = a, a_bar, R
                state.inner_iter += 1
                inner_count += 1

                value = FairnessService._inner_objective(R, a, a_bar, state.eta)
                report.objective_trace.append(value)
                report.xi_trace.append(FairnessService.violation(a, a_bar))
                logger.debug(f"Outer {outer + 1}, inner {r}: penalised objective {value:.10g}, R={R:.10g}")
                if previous is not None and previous - value < algo.eps1 * max(abs(previous), 1e-300):
                    break
                previous = value

            if stop:
                break

            xi = FairnessService.violation(state.a, state.a_bar)
            if xi > state.xi * (1.0 + 1e-12) and np.isfinite(state.xi):
                logger.warning(f"Outer iteration {outer + 1}: xi increased from {state.xi:.3e} to {xi:.3e}")
            state.xi = xi
            report.outer_trace.append(OuterRecord(eta=state.eta, xi=xi, objective=state.R, inner_iterations=inner_count))
            logger.info(f"Outer iteration {outer + 1}: eta={state.eta:.3e}, xi={xi:.3e}, R={state.R:.10g}")
            if xi <= algo.eps2:
                status = SolveStatus.CONVERGED
                break

        report.iterations = state.inner_iter
        report.outer_iterations = len(report.outer_trace)

        flags = set()
        if np.max(np.minimum(state.a, 1.0 - state.a)) > 1e-6:
            flags.add('NonBinary')
        binary = (state.a >= 0.5).astype(float)
        ls = ChannelService.link_state(s, traj)
        if np.any(binary.sum(axis=0) > 1.0):
            flags.add('SlotOverlap')
        if np.any(WeightedSumService.slot_shortfall(s, ls, binary) > RATE_TOL):
            flags.add('RateViolation')
            logger.warning("Rounded schedule misses the rate threshold in some slots")
        if status != SolveStatus.CONVERGED:
            logger.error(f"Penalty method stopped with xi={state.xi:.3e} > eps2={algo.eps2:.1e}")

        sched = Schedule(a=binary)
        report.status = status
        report.objective = float(np.min(FairnessService.average_utilities(s, ClosedFormService.utility_table(ls, s), binary)))
        report.flags = sorted(flags)
        report.wall_time_s = time.perf_counter() - started
        logger.info(
            f"Fairness design finished: {status.value} after {report.outer_iterations} outer iterations, "
            f"min utility {report.objective:.10g}"
        )
        return traj, sched, ClosedFormService.optimal_phases(ls, s), report

    @staticmethod
    def fairness_upper_bound(s: Scenario) -> float:
        """
        Max-min utility when the UAV splits the period between hovering above each IRS.

        Solves max R s.t. x_k * U_k >= R, sum x = 1, x >= 0 and checks it against 1 / sum_k(1/U_k).
        """
        U = WeightedSumService.hover_utilities(s)
        K = s.K
        lp = LinearProgram(
            c=np.concatenate([np.zeros(K), [1.0]]),
            A_ub=np.hstack([-np.diag(U), np.ones((K, 1))]),
            b_ub=np.zeros(K),
            A_eq=np.concatenate([np.ones(K), [0.0]])[None, :],
            b_eq=np.ones(1),
            lb=np.concatenate([np.zeros(K), [-np.inf]]),
            maximize=True,
        )
        value = LinearProgramSolver.solve_lp(lp, s.algo.lp_tol).objective
        closed = 0.0 if np.any(U <= 0.0) else float(1.0 / np.sum(1.0 / U))
        if abs(value - closed) > 1e-9 * max(1.0, abs(closed)):
            logger.warning(f"Fairness bound LP {value:.15g} differs from the equal-share value {closed:.15g}")
        return float(value)


__all__ = ['FairnessService']
