from typing import Sequence
import logging
import math

import numpy as np

from app.errors import InvalidInput
from app.models.scenario import Scenario
from app.models.trajectory import Trajectory

logger = logging.getLogger(__name__)

# Slack allowed on the per-step mobility limit
MOBILITY_TOL = 1e-9


class TrajectoryService:
    """Reference UAV paths and mobility checks"""

    @staticmethod
    def stationary(s: Scenario) -> Trajectory:
        """Hover at q_I for the whole period (requires q_I == q_F)"""
        if not np.allclose(s.q_init, s.q_final, rtol=0.0, atol=MOBILITY_TOL):
            raise InvalidInput("a stationary path needs q_init == q_final")
        return Trajectory(q=np.tile(np.asarray(s.q_init, dtype=float), (s.N + 1, 1)), delta=s.delta)

    @staticmethod
    def straight_line(s: Scenario) -> Trajectory:
        """Constant-speed segment from q_I to q_F"""
        t = np.linspace(0.0, 1.0, s.N + 1)[:, None]
        start = np.asarray(s.q_init, dtype=float)
        end = np.asarray(s.q_final, dtype=float)
        q = start + t * (end - start)
        q[0], q[-1] = start, end
        return Trajectory(q=q, delta=s.delta)

    @staticmethod
    def circular(s: Scenario, radius: float = 15.0, center: Sequence[float] = (0.0, 0.0)) -> Trajectory:
        """
        One lap of a circle at constant angular speed, starting and ending at q_I.

        Args:
            s: Scenario with q_init == q_final on the circle
            radius: Circle radius (m)
            center: Circle centre (m)

        Returns:
            Trajectory: N+1 points with q[0] = q[N] = q_I

        Raises:
            InvalidInput: If q_I is off the circle, q_F differs from q_I, or a chord exceeds V_max*delta
        """
        center = np.asarray(center, dtype=float)
        start = np.asarray(s.q_init, dtype=float)
        if radius < 0:
            raise InvalidInput(f"radius must be non-negative, got {radius}")
        if not np.allclose(start, s.q_final, rtol=0.0, atol=MOBILITY_TOL):
            raise InvalidInput("a circular lap must end where it starts (q_final != q_init)")
        offset = start - center
        if abs(float(np.linalg.norm(offset)) - radius) > 1e-9 * max(1.0, radius):
            raise InvalidInput(
                f"q_init is {np.linalg.norm(offset):.6g} m from the centre, not on the radius-{radius:g} circle"
            )

        chord = 2.0 * radius * math.sin(math.pi / s.N)
        reach = s.V_max * s.delta
        if chord > reach + MOBILITY_TOL:
            raise InvalidInput(
                f"circle of radius {radius:g} m needs {chord / s.delta:.4g} m/s but V_max is {s.V_max:g} m/s"
            )

        phase0 = math.atan2(offset[1], offset[0])
        angles = phase0 + 2.0 * np.pi * np.arange(s.N + 1) / s.N
        q = center + radius * np.column_stack([np.cos(angles), np.sin(angles)])
        q[0] = start
        q[-1] = start
        return Trajectory(q=q, delta=s.delta)

    @staticmethod
    def is_feasible(s: Scenario, traj: Trajectory, tol: float = MOBILITY_TOL) -> bool:
        """Mobility limit on every step and fixed endpoints"""
        if traj.N != s.N:
            return False
        steps_ok = bool(np.all(traj.step_lengths() <= s.V_max * s.delta + tol))
        start_ok = np.allclose(traj.q[0], s.q_init, rtol=0.0, atol=tol)
        end_ok = np.allclose(traj.q[-1], s.q_final, rtol=0.0, atol=tol)
        return steps_ok and start_ok and end_ok


__all__ = ['TrajectoryService', 'MOBILITY_TOL']
