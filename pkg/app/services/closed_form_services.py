import logging

import numpy as np

from app.models.channel import LinkState
from app.models.scenario import Scenario
from app.models.trajectory import PhaseSchedule
from app.services.physical_layer_services import PhysicalLayerService

logger = logging.getLogger(__name__)


class ClosedFormService:
    """Optimal IRS phases and the rate / SNR expressions they produce"""

    @staticmethod
    def optimal_phases(ls: LinkState, s: Scenario) -> PhaseSchedule:
        """
        Phases that co-phase every reflected LoS component with the direct LoS path.

        theta[k, n, m] = -(2*pi/lambda) * (d*(cos_phi2 - cos_phi1)*(m-1) - (d1 - d2) + d3), reduced mod 2*pi.
        Only the (m-1) term carries the element spacing.
        """
        m = np.arange(s.M)[None, None, :]
        wave = 2.0 * np.pi / s.wavelength
        spread = s.d_spacing * (ls.cos_phi2[:, None] - ls.cos_phi1)[:, :, None] * m
        offset = (-(ls.d1 - ls.d2[:, None]) + ls.d3[None, :])[:, :, None]
        return PhaseSchedule(theta=-wave * (spread + offset))

    @staticmethod
    def x0_sq_opt(ls: LinkState, s: Scenario, k: int, n: int) -> float:
        """|x0|^2 at the optimal phases"""
        b1, b2, b3 = ls.beta1[k, n], ls.beta2[k], ls.beta3[n]
        k12 = (s.K1 + 1.0) * (s.K2 + 1.0)
        return float(
            s.K3 * b3 / (s.K3 + 1.0)
            + s.K1 * s.K2 * s.M ** 2 * b1 * b2 / k12
            + 2.0 * s.M * np.sqrt(s.K1 * s.K2 * s.K3 * b1 * b2 * b3 / (k12 * (s.K3 + 1.0)))
        )

    @staticmethod
    def xbar0_sq_opt(ls: LinkState, k: int, n: int) -> float:
        """|xbar0|^2 at the optimal phases, c1 * beta1"""
        return float(ls.c1[k] * ls.beta1[k, n])

    @staticmethod
    def rate_uk(ls: LinkState, s: Scenario, k: int, n: int) -> float:
        """Primary rate bound in slot n when IRS k is associated, with optimal phases"""
        return float(ClosedFormService.rate_table(ls, s)[k, n])

    @staticmethod
    def rate_from_gains(s: Scenario, c1, c2, c3, beta1, beta3):
        """Rate expression in terms of the large-scale gains; broadcasts over arrays"""
        direct = (1.0 - s.rho) * np.log2(1.0 + s.P * beta3 / s.sigma2)
        combined = s.rho * np.log2(
            1.0 + s.P * ((c1 + c3) * beta1 + c2 * np.sqrt(beta1 * beta3) + beta3) / s.sigma2
        )
        return direct + combined

    @staticmethod
    def rate_table(ls: LinkState, s: Scenario) -> np.ndarray:
        """(K, N) table of R_{u,k}[n]"""
        return ClosedFormService.rate_from_gains(
            s, ls.c1[:, None], ls.c2[:, None], ls.c3[:, None], ls.beta1, ls.beta3[None, :]
        )

    @staticmethod
    def utility_table(ls: LinkState, s: Scenario) -> np.ndarray:
        """(K, N) table of F(gamma_k[n])"""
        return PhysicalLayerService.utility(PhysicalLayerService.snr_table(ls, s), s)

    @staticmethod
    def phase_rate_bound(s: Scenario, ls: LinkState, k: int, n: int, phases: np.ndarray) -> float:
        """Jensen rate bound for arbitrary phases via the LoS decomposition"""
        x0, _ = PhysicalLayerService.deterministic_terms(s, ls, k, n, phases)
        return PhysicalLayerService.primary_rate_bound(s, ls, abs(x0) ** 2, k, n)


__all__ = ['ClosedFormService']
