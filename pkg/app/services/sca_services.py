from typing import Callable, Optional, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from app.errors import InfeasibleStart, LineSearchStall
from app.models.scenario import Scenario
from app.models.solver import ConstraintBlock, SmoothConvexProgram
from app.models.trajectory import Trajectory
from app.services.barrier_services import BarrierSolver
from app.services.channel_services import ChannelService
from app.services.closed_form_services import ClosedFormService

logger = logging.getLogger(__name__)

LN2 = np.log(2.0)

# Schedule entries at or below this are treated as inactive pairs
ACTIVE_TOL = 1e-12

# Shrink factors tried when building a strictly feasible warm start
_WARM_START_MARGINS = (1e-3, 1e-6, 1e-9)

WSB = 'wsb'
FAIR = 'fair'


def _coo(rows, cols, data, shape) -> sp.csr_matrix:
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), (np.asarray(rows, dtype=int), np.asarray(cols, dtype=int))), shape=shape
    )


class _Layout:
    """Column layout of the trajectory surrogate"""

    def __init__(self, s: Scenario, a: np.ndarray, mode: str):
        N = s.N
        self.N = N
        self.K = s.K
        self.with_rate = s.R_th > 0.0
        self.with_level = mode == FAIR

        self.n_free = 2 * (N - 1)
        pairs = np.argwhere(a > ACTIVE_TOL)
        self.pair_k = pairs[:, 0]
        self.pair_n = pairs[:, 1]
        self.a_pair = a[self.pair_k, self.pair_n]
        self.n_pairs = pairs.shape[0]

        offset = self.n_free
        self.zeta1 = offset + np.arange(self.n_pairs)
        offset += self.n_pairs
        if self.with_rate:
            self.zeta2 = offset + np.arange(self.n_pairs)
            offset += self.n_pairs
            self.zeta3 = offset + np.arange(N)
            offset += N
        else:
            self.zeta2 = np.zeros(0, dtype=int)
            self.zeta3 = np.zeros(0, dtype=int)
        self.level = offset if self.with_level else None
        self.n = offset + (1 if self.with_level else 0)

        # Slots that carry a rate row
        self.rate_slots = np.unique(self.pair_n) if self.with_rate else np.zeros(0, dtype=int)
        self.slot_row = np.full(N, -1, dtype=int)
        self.slot_row[self.rate_slots] = np.arange(self.rate_slots.size)
        self.slot_mass = a.sum(axis=0)

    def point_columns(self, j: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For trajectory indices j, return (free mask, x column, y column)"""
        j = np.asarray(j, dtype=int)
        free = (j >= 1) & (j <= self.N - 1)
        col = 2 * (j - 1)
        return free, col, col + 1

    def unpack(self, x: np.ndarray, q_fixed: np.ndarray) -> np.ndarray:
        q = np.array(q_fixed, dtype=float)
        if self.n_free:
            q[1:self.N] = x[:self.n_free].reshape(-1, 2)
        return q


class ScaTrajectoryService:
    """Convex surrogates of the trajectory subproblems and the SCA refinement loop"""

    @staticmethod
    def gain_scale(s: Scenario, which: str) -> Tuple[float, float, np.ndarray]:
        """Return (alpha, height gap, anchor points) for the UAV-IRS ('irs') or UAV-BS ('bs') link"""
        if which == 'irs':
            return s.alpha1, s.H_u - s.H_s, s.irs_xy
        return s.alpha3, s.H_u - s.H_b, s.bs_xy[None, :]

    @staticmethod
    def taylor_gain_bound(beta0: float, alpha: float, height: float, p: np.ndarray, p_ref: np.ndarray, anchor: np.ndarray) -> np.ndarray:
        """
        First-order lower bound of beta0 * (u + H^2)^(-alpha/2) in u = ||p - anchor||^2, expanded at p_ref.

        The path gain is convex in u, so the bound holds for every p and is tight at p_ref.
        """
        u_ref = np.sum((np.asarray(p_ref) - anchor) ** 2, axis=-1)
        u = np.sum((np.asarray(p) - anchor) ** 2, axis=-1)
        base = u_ref + height ** 2
        value = beta0 * base ** (-alpha / 2.0)
        slope = (alpha / 2.0) * beta0 * base ** (-alpha / 2.0 - 1.0)
        return value - slope * (u - u_ref)

    @staticmethod
    def build_program(s: Scenario, a: np.ndarray, q_ref: np.ndarray, mode: str, margin: float) -> Tuple[SmoothConvexProgram, _Layout]:
        """
        Convex surrogate of the trajectory subproblem linearised at q_ref.

        Slack gains are scaled by their hover value: zeta1 = z1 / s1, zeta3 = z3 / s3 and
        zeta2 = z2 / sqrt(s1 * s3), with s = beta0 / height^alpha.

        Args:
            s: Scenario
            a: (K, N) fixed schedule
            q_ref: (N+1, 2) expansion trajectory
            mode: 'wsb' for the weighted utility, 'fair' for the max-min level
            margin: Relative shrink of the slack gains in the warm start

        Returns:
            Tuple[SmoothConvexProgram, _Layout]: Program with a warm start at q_ref and its column layout
        """
        lay = _Layout(s, a, mode)
        N, K = s.N, s.K
        q_ref = np.asarray(q_ref, dtype=float)
        ls = ChannelService.link_state(s, Trajectory(q=q_ref, delta=s.delta))
        c1, c2, c3 = ls.c1, ls.c2, ls.c3

        alpha1, h1, irs = ScaTrajectoryService.gain_scale(s, 'irs')
        alpha3, h3, bs = ScaTrajectoryService.gain_scale(s, 'bs')
        s1 = s.beta0 / h1 ** alpha1
        s3 = s.beta0 / h3 ** alpha3

        pk, pn = lay.pair_k, lay.pair_n
        slot_points = q_ref[1:]

        # Taylor data of the UAV-IRS gain per active pair, scaled by s1
        u1_ref = np.sum((slot_points[pn] - irs[pk]) ** 2, axis=1)
        base1 = u1_ref + h1 ** 2
        A1 = (h1 ** 2 / base1) ** (alpha1 / 2.0)
        B1 = (alpha1 / 2.0) * h1 ** alpha1 * base1 ** (-alpha1 / 2.0 - 1.0)

        # Taylor data of the UAV-BS gain per slot, scaled by s3
        u3_ref = np.sum((slot_points - bs[0]) ** 2, axis=1)
        base3 = u3_ref + h3 ** 2
        A3 = (h3 ** 2 / base3) ** (alpha3 / 2.0)
        B3 = (alpha3 / 2.0) * h3 ** alpha3 * base3 ** (-alpha3 / 2.0 - 1.0)

        g = s.s_pref * (c1 + c3)[pk] * s1 / s.sigma2
        e1 = s.P * (c1 + c3)[pk] * s1 / s.sigma2
        e2 = s.P * c2[pk] * np.sqrt(s1 * s3) / s.sigma2
        e3 = s.P * s3 / s.sigma2

        slot_free, slot_cx, slot_cy = lay.point_columns(pn + 1)
        all_free, all_cx, all_cy = lay.point_columns(np.arange(1, N + 1))
        n = lay.n
        shape_n = (n, n)

        def points(x: np.ndarray) -> np.ndarray:
            return lay.unpack(x, q_ref)[1:]

        blocks = []

        # zeta1 <= A1 - B1 * (||p - q_s||^2 - u_ref)
        def irs_taylor_values(x):
            u = np.sum((points(x)[pn] - irs[pk]) ** 2, axis=1)
            return x[lay.zeta1] - A1 + B1 * (u - u1_ref)

        def irs_taylor_jacobian(x):
            diff = points(x)[pn] - irs[pk]
            rows = np.arange(lay.n_pairs)
            r = [rows, rows[slot_free], rows[slot_free]]
            c = [lay.zeta1, slot_cx[slot_free], slot_cy[slot_free]]
            d = [np.ones(lay.n_pairs), 2.0 * B1[slot_free] * diff[slot_free, 0], 2.0 * B1[slot_free] * diff[slot_free, 1]]
            return _coo(np.concatenate(r), np.concatenate(c), np.concatenate(d), (lay.n_pairs, n))

        def irs_taylor_hessian(x, w):
            d = 2.0 * (w * B1)[slot_free]
            cols = np.concatenate([slot_cx[slot_free], slot_cy[slot_free]])
            return _coo(cols, cols, np.concatenate([d, d]), shape_n)

        if lay.n_pairs:
            blocks.append(ConstraintBlock(name='irs_gain_bound', values=irs_taylor_values,
                                          jacobian=irs_taylor_jacobian, hessian=irs_taylor_hessian))
            blocks.append(ConstraintBlock(
                name='irs_gain_positive',
                values=lambda x: -x[lay.zeta1],
                jacobian=lambda x: _coo(np.arange(lay.n_pairs), lay.zeta1, -np.ones(lay.n_pairs), (lay.n_pairs, n)),
            ))

        if lay.with_rate:
            def bs_taylor_values(x):
                u = np.sum((points(x) - bs[0]) ** 2, axis=1)
                return x[lay.zeta3] - A3 + B3 * (u - u3_ref)

            def bs_taylor_jacobian(x):
                diff = points(x) - bs[0]
                rows = np.arange(N)
                r = [rows, rows[all_free], rows[all_free]]
                c = [lay.zeta3, all_cx[all_free], all_cy[all_free]]
                d = [np.ones(N), 2.0 * B3[all_free] * diff[all_free, 0], 2.0 * B3[all_free] * diff[all_free, 1]]
                return _coo(np.concatenate(r), np.concatenate(c), np.concatenate(d), (N, n))

            def bs_taylor_hessian(x, w):
                d = 2.0 * (w * B3)[all_free]
                cols = np.concatenate([all_cx[all_free], all_cy[all_free]])
                return _coo(cols, cols, np.concatenate([d, d]), shape_n)

            blocks.append(ConstraintBlock(name='bs_gain_bound', values=bs_taylor_values,
                                          jacobian=bs_taylor_jacobian, hessian=bs_taylor_hessian))
            blocks.append(ConstraintBlock(
                name='bs_gain_positive',
                values=lambda x: -x[lay.zeta3],
                jacobian=lambda x: _coo(np.arange(N), lay.zeta3, -np.ones(N), (N, n)),
            ))

            # zeta2^2 / zeta3 <= zeta1
            z3_of_pair = lay.zeta3[pn]

            def qol_values(x):
                z2, z3 = x[lay.zeta2], x[z3_of_pair]
                with np.errstate(divide='ignore', invalid='ignore'):
                    v = np.where(z3 > 0.0, z2 ** 2 / z3, np.inf)
                return v - x[lay.zeta1]

            def qol_jacobian(x):
                z2, z3 = x[lay.zeta2], x[z3_of_pair]
                rows = np.arange(lay.n_pairs)
                return _coo(np.concatenate([rows, rows, rows]),
                            np.concatenate([lay.zeta2, z3_of_pair, lay.zeta1]),
                            np.concatenate([2.0 * z2 / z3, -(z2 / z3) ** 2, -np.ones(lay.n_pairs)]),
                            (lay.n_pairs, n))

            def qol_hessian(x, w):
                z2, z3 = x[lay.zeta2], x[z3_of_pair]
                h22 = w * 2.0 / z3
                h23 = -w * 2.0 * z2 / z3 ** 2
                h33 = w * 2.0 * z2 ** 2 / z3 ** 3
                return _coo(np.concatenate([lay.zeta2, lay.zeta2, z3_of_pair, z3_of_pair]),
                            np.concatenate([lay.zeta2, z3_of_pair, lay.zeta2, z3_of_pair]),
                            np.concatenate([h22, h23, h23, h33]), shape_n)

            blocks.append(ConstraintBlock(name='cross_gain', values=qol_values,
                                          jacobian=qol_jacobian, hessian=qol_hessian))

            # R_th - sum_k a * rho * log2(1 + e.zeta) - (sum_k a) * (1 - rho) * log2(1 + e3 * zeta3) <= 0
            rows_of_pair = lay.slot_row[pn]
            slots = lay.rate_slots
            n_rows = slots.size
            mass = lay.slot_mass[slots]
            z3_rows = lay.zeta3[slots]
            coef = s.rho * lay.a_pair / LN2
            direct_coef = mass * (1.0 - s.rho) / LN2

            def combined_arg(x):
                return 1.0 + e1 * x[lay.zeta1] + e2 * x[lay.zeta2] + e3 * x[z3_of_pair]

            def rate_values(x):
                arg = combined_arg(x)
                direct = 1.0 + e3 * x[z3_rows]
                if np.any(arg <= 0.0) or np.any(direct <= 0.0):
                    return np.full(n_rows, np.inf)
                total = np.zeros(n_rows)
                np.add.at(total, rows_of_pair, coef * np.log(arg))
                return s.R_th - total - direct_coef * np.log(direct)

            def rate_jacobian(x):
                arg = combined_arg(x)
                direct = 1.0 + e3 * x[z3_rows]
                scale = coef / arg
                return _coo(
                    np.concatenate([rows_of_pair, rows_of_pair, rows_of_pair, np.arange(n_rows)]),
                    np.concatenate([lay.zeta1, lay.zeta2, z3_of_pair, z3_rows]),
                    np.concatenate([-scale * e1, -scale * e2, -scale * e3, -direct_coef * e3 / direct]),
                    (n_rows, n),
                )

            def rate_hessian(x, w):
                arg = combined_arg(x)
                direct = 1.0 + e3 * x[z3_rows]
                curv = w[rows_of_pair] * coef / arg ** 2
                cols = [lay.zeta1, lay.zeta2, z3_of_pair]
                gains = [e1, e2, np.full(lay.n_pairs, e3)]
                r, c, d = [], [], []
                for i in range(3):
                    for j in range(3):
                        r.append(cols[i])
                        c.append(cols[j])
                        d.append(curv * gains[i] * gains[j])
                r.append(z3_rows)
                c.append(z3_rows)
                d.append(w * direct_coef * e3 ** 2 / direct ** 2)
                return _coo(np.concatenate(r), np.concatenate(c), np.concatenate(d), shape_n)

            if n_rows:
                blocks.append(ConstraintBlock(name='primary_rate', values=rate_values,
                                              jacobian=rate_jacobian, hessian=rate_hessian))

        # Mobility: (||q[j] - q[j-1]||^2 - D^2) / D^2 <= 0 for j = 1..N
        reach = s.V_max * s.delta
        steps = np.arange(1, N + 1)
        head_free, head_cx, head_cy = lay.point_columns(steps)
        tail_free, tail_cx, tail_cy = lay.point_columns(steps - 1)

        def mobility_values(x):
            q = lay.unpack(x, q_ref)
            return (np.sum(np.diff(q, axis=0) ** 2, axis=1) - reach ** 2) / reach ** 2

        def mobility_jacobian(x):
            diff = np.diff(lay.unpack(x, q_ref), axis=0) * (2.0 / reach ** 2)
            rows = steps - 1
            r = [rows[head_free], rows[head_free], rows[tail_free], rows[tail_free]]
            c = [head_cx[head_free], head_cy[head_free], tail_cx[tail_free], tail_cy[tail_free]]
            d = [diff[head_free, 0], diff[head_free, 1], -diff[tail_free, 0], -diff[tail_free, 1]]
            return _coo(np.concatenate(r), np.concatenate(c), np.concatenate(d), (N, n))

        def mobility_hessian(x, w):
            r, c, d = [], [], []
            both = head_free & tail_free
            for cols_h, cols_t in ((head_cx, tail_cx), (head_cy, tail_cy)):
                r += [cols_h[head_free], cols_t[tail_free], cols_h[both], cols_t[both]]
                c += [cols_h[head_free], cols_t[tail_free], cols_t[both], cols_h[both]]
                scaled = w * 2.0 / reach ** 2
                d += [scaled[head_free], scaled[tail_free], -scaled[both], -scaled[both]]
            return _coo(np.concatenate(r), np.concatenate(c), np.concatenate(d), shape_n)

        blocks.append(ConstraintBlock(name='mobility', values=mobility_values,
                                      jacobian=mobility_jacobian, hessian=mobility_hessian))

        # Utility terms a * F(gamma) in the scaled slack
        utility_weight = lay.a_pair / N

        def utilities(x):
            arg = g * x[lay.zeta1]
            if np.any(arg <= -1.0):
                return None
            return np.log1p(arg) / LN2

        if mode == WSB:
            weight = s.w[pk] * utility_weight

            def objective(x):
                u = utilities(x)
                return -np.inf if u is None else float(np.sum(weight * u))

            def gradient(x):
                grad = np.zeros(n)
                grad[lay.zeta1] = weight * g / (LN2 * (1.0 + g * x[lay.zeta1]))
                return grad

            def hessian(x):
                return _coo(lay.zeta1, lay.zeta1, -weight * g ** 2 / (LN2 * (1.0 + g * x[lay.zeta1]) ** 2), shape_n)
        else:
            level = lay.level

            def objective(x):
                return float(x[level])

            def gradient(x):
                grad = np.zeros(n)
                grad[level] = 1.0
                return grad

            def hessian(x):
                return sp.csr_matrix(shape_n)

            # R - (1/N) sum_n a * F <= 0 for every IRS
            def fairness_values(x):
                u = utilities(x)
                if u is None:
                    return np.full(K, np.inf)
                avg = np.zeros(K)
                np.add.at(avg, pk, utility_weight * u)
                return x[level] - avg

            def fairness_jacobian(x):
                slope = utility_weight * g / (LN2 * (1.0 + g * x[lay.zeta1]))
                return _coo(np.concatenate([np.arange(K), pk]),
                            np.concatenate([np.full(K, level), lay.zeta1]),
                            np.concatenate([np.ones(K), -slope]), (K, n))

            def fairness_hessian(x, w):
                curv = w[pk] * utility_weight * g ** 2 / (LN2 * (1.0 + g * x[lay.zeta1]) ** 2)
                return _coo(lay.zeta1, lay.zeta1, curv, shape_n)

            blocks.append(ConstraintBlock(name='fairness_level', values=fairness_values,
                                          jacobian=fairness_jacobian, hessian=fairness_hessian))

        # Warm start just inside the surrogate set at q_ref
        x0 = np.zeros(n)
        if lay.n_free:
            x0[:lay.n_free] = q_ref[1:N].ravel()
        zeta1_0 = A1 * (1.0 - margin)
        x0[lay.zeta1] = zeta1_0
        if lay.with_rate:
            zeta3_0 = A3 * (1.0 - margin)
            x0[lay.zeta3] = zeta3_0
            x0[lay.zeta2] = np.sqrt(zeta1_0 * zeta3_0[pn]) * (1.0 - margin)
        if lay.with_level:
            u0 = np.log1p(g * zeta1_0) / LN2
            avg0 = np.zeros(K)
            np.add.at(avg0, pk, utility_weight * u0)
            floor = float(np.min(avg0))
            x0[lay.level] = floor - max(1e-9, margin * abs(floor))

        program = SmoothConvexProgram(
            objective=objective, gradient=gradient, hessian=hessian,
            constraints=blocks, x0=x0, name=f"trajectory_{mode}",
        )
        return program, lay

    @staticmethod
    def _slot_shortfall(s: Scenario, a: np.ndarray, q: np.ndarray) -> np.ndarray:
        ls = ChannelService.link_state(s, Trajectory(q=q, delta=s.delta))
        rate = np.sum(a * ClosedFormService.rate_table(ls, s), axis=0)
        return np.maximum(s.R_th - rate, 0.0)

    @staticmethod
    def refine(
        s: Scenario,
        a: np.ndarray,
        q_prev: Trajectory,
        mode: str,
        true_objective: Callable[[Trajectory], float],
    ) -> Tuple[Trajectory, Optional[float]]:
        """
        Successive convex approximation of the trajectory for a fixed schedule.

        Each round linearises the gains at the current trajectory, solves the surrogate
        with the barrier method and keeps the result only if the true objective does not
        drop by more than 1e-9 and no slot loses rate feasibility.

        Args:
            s: Scenario
            a: (K, N) fixed schedule
            q_prev: Feasible starting trajectory
            mode: 'wsb' or 'fair'
            true_objective: Objective evaluated on actual path gains

        Returns:
            Tuple[Trajectory, Optional[float]]: Accepted trajectory and, in 'fair' mode,
            the surrogate level of the last accepted round
        """
        a = np.asarray(a, dtype=float)
        if s.V_max * s.delta == 0.0 or s.N < 2:
            return q_prev, None

        current = q_prev
        current_value = true_objective(current)
        current_shortfall = ScaTrajectoryService._slot_shortfall(s, a, current.q)
        level = None

        for round_index in range(1, s.algo.sca_max_iter + 1):
            program = lay = None
            for margin in _WARM_START_MARGINS:
                candidate_program, candidate_lay = ScaTrajectoryService.build_program(s, a, current.q, mode, margin)
                if BarrierSolver.is_strictly_feasible(candidate_program):
                    program, lay = candidate_program, candidate_lay
                    break
            if program is None:
                logger.warning(f"SCA round {round_index}: no strictly feasible warm start, keeping the current trajectory")
                break

            try:
                result = BarrierSolver.solve_sca_subproblem(program, s.algo)
            except LineSearchStall as e:
                logger.warning(f"SCA round {round_index}: {e}; keeping the current trajectory")
                break
            except InfeasibleStart as e:
                logger.warning(f"SCA round {round_index}: {e}")
                break

            candidate = Trajectory(q=lay.unpack(result.x, current.q), delta=s.delta)
            value = true_objective(candidate)
            shortfall = ScaTrajectoryService._slot_shortfall(s, a, candidate.q)
            if value < current_value - 1e-9 or np.any(shortfall > current_shortfall + 1e-9):
                logger.warning(
                    f"SCA round {round_index} rejected: objective {value:.12g} vs {current_value:.12g}, "
                    f"worst rate shortfall {float(np.max(shortfall)):.3e}"
                )
                break

            gain = value - current_value
            current, current_value, current_shortfall = candidate, value, shortfall
            if mode == FAIR:
                level = float(result.x[lay.level])
            logger.debug(f"SCA round {round_index}: objective {value:.12g} (+{gain:.3e})")
            if gain <= s.algo.sca_tol * max(1.0, abs(value)):
                break

        return current, level


__all__ = ['ScaTrajectoryService', 'ACTIVE_TOL', 'WSB', 'FAIR']
