from typing import Dict, Optional, Tuple
import logging

import numpy as np

from app.errors import DimensionMismatch, InvalidInput
from app.models.channel import ChannelDraw, LinkState
from app.models.scenario import Scenario
from app.models.trajectory import Trajectory

logger = logging.getLogger(__name__)


class ChannelService:
    """Geometry, large-scale fading and Rician sampling"""

    @staticmethod
    def path_gain(beta0: float, distance, alpha: float):
        """beta = beta0 / d^alpha"""
        return beta0 / np.power(distance, alpha)

    @staticmethod
    def composite_constants(s: Scenario, beta2: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """c1, c2, c3 for each IRS (functions of the static IRS-BS gain only)"""
        k12 = (s.K1 + 1.0) * (s.K2 + 1.0)
        c1 = s.K1 * s.K2 * s.M ** 2 * beta2 / k12
        c2 = 2.0 * s.M * np.sqrt(s.K1 * s.K2 * s.K3 * beta2 / (k12 * (s.K3 + 1.0)))
        c3 = (1.0 + s.K1 + s.K2) * s.M * beta2 / k12
        return c1, c2, c3

    @staticmethod
    def link_state(s: Scenario, traj: Trajectory) -> LinkState:
        """
        Derive distances, gains, direction cosines and composite constants for every slot.

        Args:
            s: Scenario
            traj: Trajectory with N+1 points; slot n uses q[n+1]

        Returns:
            LinkState: Populated link state

        Raises:
            DimensionMismatch: If the trajectory length does not match the scenario
        """
        if traj.N != s.N:
            raise DimensionMismatch(f"trajectory has {traj.N} slots, scenario expects {s.N}")

        uav = traj.slot_positions                       # (N, 2)
        irs = s.irs_xy                                  # (K, 2)
        bs = s.bs_xy

        horiz1 = uav[None, :, :] - irs[:, None, :]      # (K, N, 2)
        d1 = np.sqrt(np.sum(horiz1 ** 2, axis=2) + (s.H_u - s.H_s) ** 2)
        d2 = np.sqrt(np.sum((irs - bs) ** 2, axis=1) + (s.H_s - s.H_b) ** 2)
        d3 = np.sqrt(np.sum((uav - bs) ** 2, axis=1) + (s.H_u - s.H_b) ** 2)

        beta1 = ChannelService.path_gain(s.beta0, d1, s.alpha1)
        beta2 = ChannelService.path_gain(s.beta0, d2, s.alpha2)
        beta3 = ChannelService.path_gain(s.beta0, d3, s.alpha3)

        cos_phi1 = np.clip((irs[:, 0][:, None] - uav[None, :, 0]) / d1, -1.0, 1.0)
        cos_phi2 = np.clip((bs[0] - irs[:, 0]) / d2, -1.0, 1.0)

        c1, c2, c3 = ChannelService.composite_constants(s, beta2)

        return LinkState(
            uav_xy=uav, d1=d1, d2=d2, d3=d3,
            beta1=beta1, beta2=beta2, beta3=beta3,
            cos_phi1=cos_phi1, cos_phi2=cos_phi2,
            c1=c1, c2=c2, c3=c3,
        )

    @staticmethod
    def los_steering(m_count: int, cos_phi: float, dist: float, wavelength: float, d_spacing: float) -> np.ndarray:
        """
        ULA line-of-sight vector; element m is exp(-j2*pi*dist/lambda) * exp(-j2*pi*d*(m-1)*cos_phi/lambda).

        Raises:
            InvalidInput: If |cos_phi| > 1 or m_count < 1
        """
        if m_count < 1:
            raise InvalidInput(f"m_count must be >= 1, got {m_count}")
        if not np.isfinite(cos_phi) or abs(cos_phi) > 1.0:
            raise InvalidInput(f"|cos_phi| must not exceed 1, got {cos_phi}")
        m = np.arange(m_count)
        return np.exp(-2j * np.pi * dist / wavelength) * np.exp(-2j * np.pi * d_spacing * m * cos_phi / wavelength)

    @staticmethod
    def los_components(s: Scenario, ls: LinkState, k: int, n: int) -> Tuple[np.ndarray, np.ndarray, complex]:
        """LoS parts (h1_LoS, h2_LoS, h3_LoS) for IRS k in slot n"""
        ChannelService._check_indices(ls, k, n)
        if s.M >= 1:
            h1 = ChannelService.los_steering(s.M, ls.cos_phi1[k, n], ls.d1[k, n], s.wavelength, s.d_spacing)
            h2 = ChannelService.los_steering(s.M, ls.cos_phi2[k], ls.d2[k], s.wavelength, s.d_spacing)
        else:
            h1 = h2 = np.zeros(0, dtype=complex)
        h3 = complex(np.exp(-2j * np.pi * ls.d3[n] / s.wavelength))
        return h1, h2, h3

    @staticmethod
    def substream(seed: int, k: int, n: int) -> np.random.Generator:
        """Independent generator for the (k, n) link; same (seed, k, n) gives the same stream"""
        return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k, n)))

    @staticmethod
    def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
        """Circular complex Gaussian with zero mean and unit variance"""
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    @staticmethod
    def _rician(beta: float, K: float, los: np.ndarray, nlos: np.ndarray) -> np.ndarray:
        return np.sqrt(beta) * (np.sqrt(K / (K + 1.0)) * los + np.sqrt(1.0 / (K + 1.0)) * nlos)

    @staticmethod
    def sample_channels(s: Scenario, ls: LinkState, n: int, k: int, rng: np.random.Generator) -> ChannelDraw:
        """
        One Rician realisation of (h1, h2, h3) for IRS k in slot n.

        The NLoS parts are redrawn independently on every call.
        """
        return ChannelService.sample_link_draws(s, ls, k, n, count=None, rng=rng)

    @staticmethod
    def sample_link_draws(
        s: Scenario,
        ls: LinkState,
        k: int,
        n: int,
        count: Optional[int],
        seed: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
    ) -> ChannelDraw:
        """
        Batch of Rician realisations for one link; count=None returns a single draw.

        Args:
            s: Scenario
            ls: Link state
            k: IRS index
            n: Slot index
            count: Batch size, or None for one unbatched draw
            seed: Used to open the (k, n) substream when rng is not given
            rng: Explicit generator

        Returns:
            ChannelDraw: h1, h2 of shape (count, M), h3 of shape (count,)
        """
        if rng is None:
            rng = ChannelService.substream(s.rng_seed if seed is None else seed, k, n)
        h1_los, h2_los, h3_los = ChannelService.los_components(s, ls, k, n)
        lead = () if count is None else (int(count),)

        nlos1 = ChannelService._complex_normal(rng, lead + (s.M,))
        nlos2 = ChannelService._complex_normal(rng, lead + (s.M,))
        nlos3 = ChannelService._complex_normal(rng, lead)

        return ChannelDraw(
            h1=ChannelService._rician(ls.beta1[k, n], s.K1, h1_los, nlos1),
            h2=ChannelService._rician(ls.beta2[k], s.K2, h2_los, nlos2),
            h3=ChannelService._rician(ls.beta3[n], s.K3, h3_los, nlos3),
        )

    @staticmethod
    def cascade_terms(s: Scenario, ls: LinkState, k: int, n: int, phases: np.ndarray, draws: ChannelDraw) -> Dict[str, np.ndarray]:
        """
        Split each draw of h3 + h2^H Theta h1 into its deterministic part x0 and
        the zero-mean terms x1 (direct NLoS), x2 (NLoS IRS-BS x LoS UAV-IRS),
        x3 (LoS IRS-BS x NLoS UAV-IRS), x4 (NLoS x NLoS).
        """
        h1_los, h2_los, h3_los = ChannelService.los_components(s, ls, k, n)
        b1, b2, b3 = ls.beta1[k, n], ls.beta2[k], ls.beta3[n]
        g1 = np.sqrt(s.K1 / (s.K1 + 1.0))
        g2 = np.sqrt(s.K2 / (s.K2 + 1.0))
        g3 = np.sqrt(s.K3 / (s.K3 + 1.0))
        f1 = np.sqrt(1.0 / (s.K1 + 1.0))
        f2 = np.sqrt(1.0 / (s.K2 + 1.0))
        f3 = np.sqrt(1.0 / (s.K3 + 1.0))

        # Recover the unit NLoS parts from the draws
        nlos1 = (draws.h1 / np.sqrt(b1) - g1 * h1_los) / f1
        nlos2 = (draws.h2 / np.sqrt(b2) - g2 * h2_los) / f2
        nlos3 = (draws.h3 / np.sqrt(b3) - g3 * h3_los) / f3

        theta = np.exp(1j * np.asarray(phases))
        amp = np.sqrt(b1 * b2)

        def bilinear(u: np.ndarray, v: np.ndarray) -> np.ndarray:
            return np.sum(np.conj(u) * theta * v, axis=-1)

        x0 = np.sqrt(b3) * g3 * h3_los + amp * g1 * g2 * bilinear(h2_los, h1_los)
        return {
            'x0': np.broadcast_to(x0, np.shape(draws.h3)),
            'x1': np.sqrt(b3) * f3 * nlos3,
            'x2': amp * g1 * f2 * bilinear(nlos2, h1_los),
            'x3': amp * f1 * g2 * bilinear(h2_los, nlos1),
            'x4': amp * f1 * f2 * bilinear(nlos2, nlos1),
        }

    @staticmethod
    def cascade_moments(s: Scenario, ls: LinkState, k: int, n: int) -> Dict[str, float]:
        """Analytic second moments E|x1|^2 .. E|x4|^2"""
        b1, b2, b3 = ls.beta1[k, n], ls.beta2[k], ls.beta3[n]
        k12 = (s.K1 + 1.0) * (s.K2 + 1.0)
        return {
            'x1': b3 / (s.K3 + 1.0),
            'x2': s.K1 * s.M * b1 * b2 / k12,
            'x3': s.K2 * s.M * b1 * b2 / k12,
            'x4': s.M * b1 * b2 / k12,
        }

    @staticmethod
    def _check_indices(ls: LinkState, k: int, n: int) -> None:
        if not (0 <= k < ls.K and 0 <= n < ls.N):
            raise DimensionMismatch(f"index (k={k}, n={n}) outside link state of shape ({ls.K}, {ls.N})")


__all__ = ['ChannelService']
