from typing import List, Tuple, Union
import logging
import time

import numpy as np

from app.errors import Infeasible, InfeasibleLP, InfeasibleSlot, InvalidInput
from app.models.channel import LinkState
from app.models.report import SolveReport, SolveStatus
from app.models.scenario import Scenario
from app.models.trajectory import PhaseSchedule, Schedule, Trajectory
from app.services.channel_services import ChannelService
from app.services.closed_form_services import ClosedFormService
from app.services.linear_program_services import LinearProgramSolver
from app.services.physical_layer_services import PhysicalLayerService
from app.services.sca_services import WSB, ScaTrajectoryService
from app.services.trajectory_services import TrajectoryService

logger = logging.getLogger(__name__)

ScheduleLike = Union[Schedule, np.ndarray]

# Slack on the per-slot rate requirement when verifying a schedule
RATE_TOL = 1e-9


def _matrix(sched: ScheduleLike) -> np.ndarray:
    return sched.a if isinstance(sched, Schedule) else np.asarray(sched, dtype=float)


class WeightedSumService:
    """Alternating schedule / trajectory design for the weighted utility sum"""

    @staticmethod
    def objective_from_tables(s: Scenario, utilities: np.ndarray, a: np.ndarray) -> float:
        """(1/N) * sum_k sum_n w_k * a_k[n] * F_k[n]"""
        return float(np.sum(s.w[:, None] * a * utilities) / s.N)

    @staticmethod
    def weighted_sum_objective(s: Scenario, traj: Trajectory, sched: ScheduleLike) -> float:
        """True weighted utility of a (possibly relaxed) design"""
        ls = ChannelService.link_state(s, traj)
        return WeightedSumService.objective_from_tables(s, ClosedFormService.utility_table(ls, s), _matrix(sched))

    @staticmethod
    def slot_shortfall(s: Scenario, ls: LinkState, a: np.ndarray) -> np.ndarray:
        """Per-slot amount by which sum_k a_k[n] * R_{u,k}[n] misses R_th (zero when met)"""
        rate = np.sum(a * ClosedFormService.rate_table(ls, s), axis=0)
        return np.maximum(s.R_th - rate, 0.0)

    @staticmethod
    def hover_utilities(s: Scenario) -> np.ndarray:
        """Per-IRS utility with the UAV hovering right above the IRS"""
        d2 = np.sqrt(np.sum((s.irs_xy - s.bs_xy) ** 2, axis=1) + (s.H_s - s.H_b) ** 2)
        beta2 = ChannelService.path_gain(s.beta0, d2, s.alpha2)
        c1, _, c3 = ChannelService.composite_constants(s, beta2)
        gamma = (c1 + c3) * s.beta0 / (s.sigma2 * (s.H_u - s.H_s) ** s.alpha1)
        return np.asarray(PhysicalLayerService.utility(gamma, s), dtype=float)

    @staticmethod
    def initial_trajectory(s: Scenario) -> Trajectory:
        """
        Starting path for the alternating design.

        A lap of the circle centred at the BS through q_I when the path is closed,
        otherwise the straight segment q_I -> q_F; hovering at q_I is the fallback.
        Every slot must have at least one IRS meeting the rate threshold.

        Raises:
            Infeasible: If no candidate path meets R_th in every slot
        """
        candidates: List[Tuple[str, Trajectory]] = []
        closed = np.allclose(s.q_init, s.q_final, rtol=0.0, atol=1e-9)
        if closed:
            radius = float(np.linalg.norm(np.asarray(s.q_init) - s.bs_xy))
            try:
                candidates.append(('circular', TrajectoryService.circular(s, radius=radius, center=s.bs_xy)))
            except InvalidInput as e:
                logger.info(f"Circular start rejected: {e}")
        else:
            candidates.append(('straight', TrajectoryService.straight_line(s)))
        if closed:
            candidates.append(('stationary', TrajectoryService.stationary(s)))

        for label, traj in candidates:
            ls = ChannelService.link_state(s, traj)
            best_rate = np.max(ClosedFormService.rate_table(ls, s), axis=0)
            short = np.flatnonzero(best_rate < s.R_th)
            if short.size == 0:
                logger.info(f"Initial trajectory: {label}")
                return traj
            logger.info(f"{label} start misses R_th in {short.size} slots (first: {short[0]})")

        raise Infeasible(f"no initial trajectory meets the rate threshold R_th={s.R_th} in every slot")

    @staticmethod
    def schedule_with_diagnostics(s: Scenario, ls: LinkState) -> Tuple[Schedule, List[int]]:
        """
        Per-slot exact association LP.

        Returns:
            Tuple[Schedule, List[int]]: Schedule and the slots whose optimum is fractional

        Raises:
            InfeasibleSlot: If a slot has no association meeting R_th
        """
        values = s.w[:, None] * ClosedFormService.utility_table(ls, s)
        rates = ClosedFormService.rate_table(ls, s)
        a = np.zeros((s.K, s.N))
        fractional: List[int] = []
        for n in range(s.N):
            try:
                a[:, n], binary = LinearProgramSolver.solve_schedule_slot(values[:, n], rates[:, n], s.R_th, s.algo.lp_tol)
            except InfeasibleLP as e:
                logger.error(f"Slot {n} is infeasible: {e}")
                raise InfeasibleSlot(n, f"slot {n}: {e}") from e
            if not binary:
                fractional.append(n)
                best = int(np.argmax(values[:, n]))
                logger.warning(
                    f"Slot {n}: fractional association {np.round(a[:, n], 6).tolist()}; "
                    f"best-value IRS {best} has rate {rates[best, n]:.6g} < R_th={s.R_th}"
                )
        return Schedule(a=a), fractional

    @staticmethod
    def schedule_subproblem(s: Scenario, ls: LinkState) -> Schedule:
        """
        Optimal association for a fixed trajectory.

        Args:
            s: Scenario
            ls: Link state of the current trajectory

        Returns:
            Schedule: Per-slot LP optimum, binary whenever the best-value IRS meets R_th

        Raises:
            InfeasibleSlot: If a slot has no association meeting R_th
        """
        sched, _ = WeightedSumService.schedule_with_diagnostics(s, ls)
        return sched

    @staticmethod
    def trajectory_subproblem(s: Scenario, sched: ScheduleLike, q_prev: Trajectory) -> Trajectory:
        """
        Improve the trajectory for a fixed schedule by successive convex approximation.

        Args:
            s: Scenario
            sched: Fixed schedule
            q_prev: Feasible previous trajectory

        Returns:
            Trajectory: Weighted utility no lower than at q_prev (minus 1e-9)
        """
        a = _matrix(sched)
        traj, _ = ScaTrajectoryService.refine(
            s, a, q_prev, WSB, lambda t: WeightedSumService.weighted_sum_objective(s, t, a)
        )
        return traj

    @staticmethod
    def run_weighted_sum(s: Scenario) -> Tuple[Trajectory, Schedule, PhaseSchedule, SolveReport]:
        """
        Alternate the association LP and the trajectory SCA until the fractional
        objective increase drops below eps1.

        Args:
            s: Scenario

        Returns:
            Tuple of the final trajectory, binary schedule, optimal phases and the solve report

        Raises:
            Infeasible: If no initial trajectory meets the rate threshold
            InfeasibleSlot: If an association LP has no feasible point
        """
        started = time.perf_counter()
        logger.info(f"Weighted-sum design on '{s.name}': K={s.K}, N={s.N}, M={s.M}")
        report = SolveReport(algorithm='wsb')
        flags = set()

        traj = WeightedSumService.initial_trajectory(s)
        ls = ChannelService.link_state(s, traj)
        uniform = Schedule.uniform(s.K, s.N)
        if not np.any(WeightedSumService.slot_shortfall(s, ls, uniform.a) > RATE_TOL):
            report.objective_trace.append(
                WeightedSumService.objective_from_tables(s, ClosedFormService.utility_table(ls, s), uniform.a)
            )

        sched = uniform
        status = SolveStatus.MAX_ITER
        for r in range(1, s.algo.r_max + 1):
            sched, fractional = WeightedSumService.schedule_with_diagnostics(s, ls)
            if fractional:
                flags.add('NonBinary')
            traj = WeightedSumService.trajectory_subproblem(s, sched, traj)
            ls = ChannelService.link_state(s, traj)

            shortfall = WeightedSumService.slot_shortfall(s, ls, sched.a)
            if np.any(shortfall > RATE_TOL):
                logger.error(f"AO iteration {r}: rate threshold missed by {float(np.max(shortfall)):.3e}")
                flags.add('RateViolation')

            value = WeightedSumService.objective_from_tables(s, ClosedFormService.utility_table(ls, s), sched.a)
            previous = report.objective_trace[-1] if report.objective_trace else None
            report.objective_trace.append(value)
            report.iterations = r
            logger.info(f"AO iteration {r}: objective {value:.10g}")

            if previous is not None and value - previous < s.algo.eps1 * max(abs(previous), 1e-300):
                status = SolveStatus.CONVERGED
                break

        if not sched.is_binary():
            flags.add('NonBinary')
        phases = ClosedFormService.optimal_phases(ls, s)

        report.status = status
        report.objective = report.objective_trace[-1]
        report.flags = sorted(flags)
        report.wall_time_s = time.perf_counter() - started
        logger.info(
            f"Weighted-sum design finished: {status.value} after {report.iterations} iterations, "
            f"objective {report.objective:.10g}"
        )
        return traj, sched, phases, report

    @staticmethod
    def weighted_sum_upper_bound(s: Scenario) -> float:
        """
        Utility bound from hovering above the best IRS for the whole period.

        With unit weights this is max_k log2(1 + s_pref * (c1+c3) * beta0 / (sigma^2 * (H_u-H_s)^alpha1)).
        """
        return float(np.max(s.w * WeightedSumService.hover_utilities(s)))


__all__ = ['WeightedSumService', 'RATE_TOL']
