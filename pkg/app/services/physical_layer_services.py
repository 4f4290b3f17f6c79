from typing import Optional, Tuple, Union
import logging

import numpy as np
from scipy.special import erfc

from app.errors import DegenerateChannel, InvalidInput
from app.models.channel import ChannelDraw, DetectionStats, LinkState
from app.models.scenario import Scenario
from app.services.channel_services import ChannelService

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

LN2 = np.log(2.0)

# Symbols simulated per vectorised batch in the energy-detector Monte-Carlo
_MC_CHUNK = 2048


def _scalar_or_array(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


class PhysicalLayerService:
    """Primary rate, energy detection and BER for the symbiotic link"""

    @staticmethod
    def q_function(x: ArrayLike) -> ArrayLike:
        """Gaussian tail probability Q(x) = 0.5 * erfc(x / sqrt(2))"""
        return _scalar_or_array(0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0)))

    @staticmethod
    def detection_stats(reflect_power: float, sigma2: float, P: float, L: int) -> DetectionStats:
        """Energy statistics with sigma1^2 = P*g + sigma^2 and sigma0^2 = sigma^2"""
        sigma1_sq = P * reflect_power + sigma2
        threshold = None
        if sigma1_sq > sigma2 * (1.0 + 1e-15):
            threshold = PhysicalLayerService._threshold(sigma1_sq, sigma2, L)
        return DetectionStats(sigma1_sq=sigma1_sq, sigma0_sq=sigma2, L=L, threshold=threshold)

    @staticmethod
    def _threshold(sigma1_sq: float, sigma0_sq: float, L: int) -> float:
        total = sigma1_sq + sigma0_sq
        root = np.sqrt(1.0 + 2.0 * total * np.log(sigma1_sq / sigma0_sq) / (L * (sigma1_sq - sigma0_sq)))
        return float(L * sigma1_sq * sigma0_sq / total * (1.0 + root))

    @staticmethod
    def optimal_threshold(stats: DetectionStats) -> float:
        """
        Decision threshold on the summed energy of L samples.

        Raises:
            DegenerateChannel: If sigma1^2 does not exceed sigma0^2
        """
        if stats.sigma1_sq <= stats.sigma0_sq * (1.0 + 1e-15):
            raise DegenerateChannel(
                f"sigma1^2={stats.sigma1_sq:.6g} does not exceed sigma0^2={stats.sigma0_sq:.6g}; no reflection to detect"
            )
        return PhysicalLayerService._threshold(stats.sigma1_sq, stats.sigma0_sq, stats.L)

    @staticmethod
    def ber_closed_form(reflect_power: ArrayLike, sigma2: float, P: float, L: int) -> ArrayLike:
        """Large-L BER Q(sqrt(L) * P*g / (P*g + 2*sigma^2))"""
        pg = P * np.asarray(reflect_power, dtype=float)
        arg = np.sqrt(L) * np.divide(pg, pg + 2.0 * sigma2, out=np.zeros_like(pg), where=(pg + 2.0 * sigma2) > 0)
        return PhysicalLayerService.q_function(arg)

    @staticmethod
    def ber_exact_threshold(stats: DetectionStats, rho: float) -> float:
        """Gaussian-approximation BER evaluated at the exact optimal threshold"""
        th = PhysicalLayerService.optimal_threshold(stats)
        sqrt_l = np.sqrt(stats.L)
        miss = PhysicalLayerService.q_function((stats.L * stats.sigma1_sq - th) / (sqrt_l * stats.sigma1_sq))
        false_alarm = PhysicalLayerService.q_function((th - stats.L * stats.sigma0_sq) / (sqrt_l * stats.sigma0_sq))
        return float(rho * miss + (1.0 - rho) * false_alarm)

    @staticmethod
    def primary_rate_exact(s: Scenario, draw: ChannelDraw, phases: np.ndarray) -> ArrayLike:
        """Instantaneous primary rate averaged over the IRS on/off states (bps/Hz)"""
        snr_on = s.P * np.abs(draw.combined(phases)) ** 2 / s.sigma2
        snr_off = s.P * np.abs(draw.h3) ** 2 / s.sigma2
        rate = s.rho * np.log2(1.0 + snr_on) + (1.0 - s.rho) * np.log2(1.0 + snr_off)
        return _scalar_or_array(rate)

    @staticmethod
    def primary_rate_bound(s: Scenario, ls: LinkState, x0_sq: float, k: int, n: int) -> float:
        """Jensen upper bound on the ergodic primary rate given |x0|^2 (bps/Hz)"""
        if x0_sq < 0:
            raise InvalidInput(f"x0_sq must be non-negative, got {x0_sq}")
        b1, b2, b3 = ls.beta1[k, n], ls.beta2[k], ls.beta3[n]
        diffuse = (s.K1 + s.K2 + 1.0) * s.M * b1 * b2 / ((s.K1 + 1.0) * (s.K2 + 1.0))
        direct = (1.0 - s.rho) * np.log2(1.0 + s.P * b3 / s.sigma2)
        combined = s.rho * np.log2(1.0 + s.P * (x0_sq + diffuse + b3 / (s.K3 + 1.0)) / s.sigma2)
        return float(direct + combined)

    @staticmethod
    def deterministic_terms(s: Scenario, ls: LinkState, k: int, n: int, phases: np.ndarray) -> Tuple[complex, complex]:
        """
        LoS-only parts of the received channel for arbitrary phases.

        Returns:
            (x0, xbar0): x0 includes the direct LoS path, xbar0 is the reflected LoS path only
        """
        h1_los, h2_los, h3_los = ChannelService.los_components(s, ls, k, n)
        k12 = (s.K1 + 1.0) * (s.K2 + 1.0)
        xbar0 = np.sqrt(ls.beta1[k, n] * ls.beta2[k] * s.K1 * s.K2 / k12) * np.sum(
            np.conj(h2_los) * np.exp(1j * np.asarray(phases)) * h1_los
        )
        x0 = np.sqrt(ls.beta3[n] * s.K3 / (s.K3 + 1.0)) * h3_los + xbar0
        return complex(x0), complex(xbar0)

    @staticmethod
    def expected_reflect_power(s: Scenario, ls: LinkState, k: int, n: int, phases: np.ndarray) -> float:
        """E|h2^H Theta h1|^2 = |xbar0|^2 + (K1+K2+1) M beta1 beta2 / ((K1+1)(K2+1))"""
        _, xbar0 = PhysicalLayerService.deterministic_terms(s, ls, k, n, phases)
        diffuse = (s.K1 + s.K2 + 1.0) * s.M * ls.beta1[k, n] * ls.beta2[k] / ((s.K1 + 1.0) * (s.K2 + 1.0))
        return float(abs(xbar0) ** 2 + diffuse)

    @staticmethod
    def simulate_energies(stats: DetectionStats, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Summed energy of L complex Gaussian residual samples for each OOK symbol"""
        bits = np.asarray(bits, dtype=bool)
        std = np.sqrt(np.where(bits, stats.sigma1_sq, stats.sigma0_sq) / 2.0)[:, None]
        shape = (bits.size, stats.L)
        samples = std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        return np.sum(np.abs(samples) ** 2, axis=1)

    @staticmethod
    def ber_monte_carlo_stats(stats: DetectionStats, rho: float, symbols: int, rng: np.random.Generator) -> float:
        """Empirical error rate of the joint energy detector for given energy statistics"""
        if symbols < 1000:
            raise InvalidInput(f"at least 1000 symbols are required, got {symbols}")
        threshold = PhysicalLayerService.optimal_threshold(stats)
        errors = 0
        remaining = int(symbols)
        while remaining > 0:
            batch = min(_MC_CHUNK, remaining)
            bits = rng.random(batch) < rho
            energy = PhysicalLayerService.simulate_energies(stats, bits, rng)
            errors += int(np.count_nonzero((energy > threshold) != bits))
            remaining -= batch
        return errors / symbols

    @staticmethod
    def ber_monte_carlo(
        s: Scenario,
        draw: ChannelDraw,
        phases: np.ndarray,
        symbols: int,
        rng: np.random.Generator,
        L: Optional[int] = None,
    ) -> float:
        """
        Simulate OOK IRS symbols through the joint energy detector for one channel draw.

        Raises:
            DegenerateChannel: If the draw reflects no energy
            InvalidInput: If fewer than 1000 symbols are requested
        """
        g = float(np.abs(draw.reflected(phases)) ** 2)
        stats = PhysicalLayerService.detection_stats(g, s.sigma2, s.P, s.L if L is None else L)
        return PhysicalLayerService.ber_monte_carlo_stats(stats, s.rho, symbols, rng)

    @staticmethod
    def irs_snr(ls: LinkState, s: Scenario, k: int, n: int) -> float:
        """gamma_k[n] = (c1 + c3) * beta1 / sigma^2"""
        return float((ls.c1[k] + ls.c3[k]) * ls.beta1[k, n] / s.sigma2)

    @staticmethod
    def snr_table(ls: LinkState, s: Scenario) -> np.ndarray:
        """(K, N) table of irs_snr"""
        return (ls.c1 + ls.c3)[:, None] * ls.beta1 / s.sigma2

    @staticmethod
    def utility(gamma: ArrayLike, s: Scenario) -> ArrayLike:
        """F(gamma) = log2(1 + s_pref * gamma)"""
        return _scalar_or_array(np.log1p(s.s_pref * np.asarray(gamma, dtype=float)) / LN2)


__all__ = ['PhysicalLayerService']
