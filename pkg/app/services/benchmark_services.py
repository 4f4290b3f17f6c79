from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
from pathlib import Path
import logging

import numpy as np

from app.errors import InvalidInput
from app.models.report import ComparisonRow
from app.models.scenario import Scenario
from app.models.trajectory import PhaseSchedule, Schedule, Trajectory
from app.services.channel_services import ChannelService
from app.services.closed_form_services import ClosedFormService
from app.services.fairness_services import FairnessService
from app.services.physical_layer_services import PhysicalLayerService
from app.services.scenario_services import ScenarioService
from app.services.trajectory_services import TrajectoryService
from app.services.weighted_sum_services import RATE_TOL, WeightedSumService

logger = logging.getLogger(__name__)

PROPOSED_WSB = 'proposed-wsb'
PROPOSED_FAIR = 'proposed-fair'
CIRCULAR = 'circular'
FIXED_PHASE_PI = 'fixed-phase-pi'
FIXED_PHASE_HALF_PI = 'fixed-phase-half-pi'
UPPER_BOUND = 'upper-bound'

SCHEMES = (PROPOSED_WSB, PROPOSED_FAIR, CIRCULAR, FIXED_PHASE_PI, FIXED_PHASE_HALF_PI, UPPER_BOUND)
FIXED_PHASES = {FIXED_PHASE_PI: np.pi, FIXED_PHASE_HALF_PI: np.pi / 2.0}

DEFAULT_GRIDS = {
    'T': (10.0, 20.0, 30.0, 40.0),
    'M': (20, 40, 60, 80, 100),
}

LAP_SAMPLES = 720

WSB = 'wsb'
FAIR = 'fair'


class BenchmarkService:
    """Baseline schemes, bounds and parameter sweeps"""

    @staticmethod
    def circular_trajectory(s: Scenario, radius: float = 15.0, center: Sequence[float] = (0.0, 0.0)) -> Trajectory:
        """
        Constant-speed lap of a circle through q_I.

        Raises:
            InvalidInput: If q_I is off the circle, the lap is not closed, or it is too fast
        """
        return TrajectoryService.circular(s, radius=radius, center=center)

    @staticmethod
    def fixed_phase_eval(s: Scenario, traj: Trajectory, theta0: Union[float, PhaseSchedule]) -> Dict[str, np.ndarray]:
        """
        Utility and rate-bound tables when every element uses the same phase theta0,
        or the per-slot phases of a PhaseSchedule.

        Returns:
            Dict with 'utilities' and 'rates', both (K, N)

        Raises:
            InvalidInput: If a scalar theta0 is outside [0, 2*pi)
        """
        if not isinstance(theta0, PhaseSchedule):
            theta0 = float(theta0)
            if not (0.0 <= theta0 < 2.0 * np.pi):
                raise InvalidInput(f"theta0 must lie in [0, 2*pi), got {theta0}")
            theta0 = PhaseSchedule.constant(s.K, s.N, s.M, theta0)

        ls = ChannelService.link_state(s, traj)
        power = np.zeros((s.K, s.N))
        rates = np.zeros((s.K, s.N))
        for k in range(s.K):
            for n in range(s.N):
                phases = theta0.theta[k, n]
                power[k, n] = PhysicalLayerService.expected_reflect_power(s, ls, k, n, phases)
                rates[k, n] = ClosedFormService.phase_rate_bound(s, ls, k, n, phases)
        utilities = np.asarray(PhysicalLayerService.utility(power / s.sigma2, s), dtype=float)
        return {'utilities': utilities, 'rates': rates}

    @staticmethod
    def circular_wsb(s: Scenario) -> Tuple[Trajectory, Schedule, float]:
        """Circle around the origin with the per-slot optimal association"""
        traj = BenchmarkService.circular_trajectory(s, radius=float(np.linalg.norm(s.q_init)))
        ls = ChannelService.link_state(s, traj)
        sched = WeightedSumService.schedule_subproblem(s, ls)
        value = WeightedSumService.objective_from_tables(s, ClosedFormService.utility_table(ls, s), sched.a)
        return traj, sched, value

    @staticmethod
    def lap_average_utilities(s: Scenario, radius: float, samples: int = LAP_SAMPLES) -> np.ndarray:
        """
        Time average of F_k over one constant-speed lap of the circle through q_I.

        Evaluated at `samples` equally spaced angles, so the value depends on the circle
        and not on T or delta.
        """
        lap = ScenarioService.with_overrides(s, T=samples * s.delta)
        ls = ChannelService.link_state(lap, BenchmarkService.circular_trajectory(lap, radius=radius))
        return np.mean(ClosedFormService.utility_table(ls, lap), axis=1)

    @staticmethod
    def circular_fair(s: Scenario) -> Tuple[Trajectory, Schedule, float]:
        """
        Circle around the origin with IRS k served a constant share x_k of every slot.

        The shares equalise x_k * Fbar_k, where Fbar_k is the lap-average utility, giving the
        level 1 / sum_k (1 / Fbar_k). The slot-sampled average of the returned schedule
        differs from the level only by the sampling of the lap.
        """
        radius = float(np.linalg.norm(s.q_init))
        traj = BenchmarkService.circular_trajectory(s, radius=radius)
        ls = ChannelService.link_state(s, traj)
        mean_utility = BenchmarkService.lap_average_utilities(s, radius)
        if np.any(mean_utility <= 0.0):
            return traj, Schedule(a=np.zeros((s.K, s.N))), 0.0
        level = float(1.0 / np.sum(1.0 / mean_utility))
        shares = level / mean_utility
        sched = Schedule(a=np.repeat(shares[:, None], s.N, axis=1))
        short = WeightedSumService.slot_shortfall(s, ls, sched.a)
        if np.any(short > RATE_TOL):
            logger.warning(f"Circular time-sharing misses R_th in {int(np.count_nonzero(short > RATE_TOL))} slots")
        return traj, sched, level

    @staticmethod
    def _fixed_phase_value(s: Scenario, objective: str, traj: Trajectory, sched: Schedule, theta0: float) -> float:
        tables = BenchmarkService.fixed_phase_eval(s, traj, theta0)
        short = np.maximum(s.R_th - np.sum(sched.a * tables['rates'], axis=0), 0.0)
        if np.any(short > RATE_TOL):
            logger.info(f"Fixed phase {theta0:.4f}: rate bound below R_th in {int(np.count_nonzero(short > RATE_TOL))} slots")
        if objective == WSB:
            return WeightedSumService.objective_from_tables(s, tables['utilities'], sched.a)
        return float(np.min(FairnessService.average_utilities(s, tables['utilities'], sched.a)))

    @staticmethod
    def compare_schemes(
        s: Scenario,
        schemes: Optional[Iterable[str]] = None,
        objectives: Sequence[str] = (WSB, FAIR),
        sweep: Optional[str] = None,
        point: Optional[float] = None,
    ) -> List[ComparisonRow]:
        """
        Evaluate each scheme under each objective on one scenario.

        proposed-wsb and proposed-fair only apply to their own objective; the fixed-phase
        schemes reuse the proposed design of the same objective.

        Raises:
            InvalidInput: If a scheme name is unknown
        """
        schemes = list(SCHEMES if schemes is None else schemes)
        unknown = [name for name in schemes if name not in SCHEMES]
        if unknown:
            raise InvalidInput(f"unknown schemes {unknown}; choose from {list(SCHEMES)}")

        designs: Dict[str, Tuple[Trajectory, Schedule, float]] = {}

        def proposed(objective: str) -> Tuple[Trajectory, Schedule, float]:
            if objective not in designs:
                if objective == WSB:
                    traj, sched, _, report = WeightedSumService.run_weighted_sum(s)
                else:
                    traj, sched, _, report = FairnessService.run_fairness(s)
                designs[objective] = (traj, sched, report.objective)
            return designs[objective]

        rows: List[ComparisonRow] = []

        def add(scheme: str, objective: str, value: float) -> None:
            rows.append(ComparisonRow(sweep=sweep, value=point, scheme=scheme, objective=objective, utility=value))
            logger.info(f"{scheme} [{objective}]{'' if sweep is None else f' {sweep}={point:g}'}: {value:.10g}")

        for objective in objectives:
            for scheme in schemes:
                if scheme == PROPOSED_WSB and objective == WSB:
                    add(scheme, objective, proposed(WSB)[2])
                elif scheme == PROPOSED_FAIR and objective == FAIR:
                    add(scheme, objective, proposed(FAIR)[2])
                elif scheme == CIRCULAR:
                    run = BenchmarkService.circular_wsb if objective == WSB else BenchmarkService.circular_fair
                    add(scheme, objective, run(s)[2])
                elif scheme in FIXED_PHASES:
                    traj, sched, _ = proposed(objective)
                    add(scheme, objective, BenchmarkService._fixed_phase_value(s, objective, traj, sched, FIXED_PHASES[scheme]))
                elif scheme == UPPER_BOUND:
                    bound = (WeightedSumService.weighted_sum_upper_bound(s) if objective == WSB
                             else FairnessService.fairness_upper_bound(s))
                    add(scheme, objective, bound)
        return rows

    @staticmethod
    def sweep(
        s: Scenario,
        axis: str,
        grid: Optional[Sequence[float]] = None,
        schemes: Optional[Iterable[str]] = None,
        objectives: Sequence[str] = (WSB, FAIR),
    ) -> List[ComparisonRow]:
        """
        Repeat compare_schemes over a grid of periods T or element counts M.

        Raises:
            InvalidInput: If the axis is not T or M
        """
        if axis not in DEFAULT_GRIDS:
            raise InvalidInput(f"sweep axis must be one of {list(DEFAULT_GRIDS)}, got {axis!r}")
        grid = DEFAULT_GRIDS[axis] if grid is None else grid
        schemes = list(SCHEMES if schemes is None else schemes)

        rows: List[ComparisonRow] = []
        for point in grid:
            if axis == 'T':
                point_scenario = ScenarioService.with_overrides(s, T=float(point))
            else:
                point_scenario = ScenarioService.with_overrides(s, M=int(point))
            logger.info(f"Sweep {axis}={point:g}")
            rows.extend(BenchmarkService.compare_schemes(point_scenario, schemes, objectives, sweep=axis, point=float(point)))
        return rows

    @staticmethod
    def write_comparison(rows: List[ComparisonRow], path: Union[str, Path]) -> Path:
        """Write comparison.csv with columns sweep, value, scheme, objective, utility"""
        return ScenarioService.write_rows(
            path,
            ['sweep', 'value', 'scheme', 'objective', 'utility'],
            [[row.sweep or '', '' if row.value is None else row.value, row.scheme, row.objective, row.utility]
             for row in rows],
        )


__all__ = ['BenchmarkService', 'SCHEMES', 'DEFAULT_GRIDS']
