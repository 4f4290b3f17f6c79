from typing import Callable, List, Sequence, Tuple, Union
from pathlib import Path
import json
import logging

import numpy as np
from scipy.special import ndtr, ndtri

from app.errors import IoError
from app.models.report import SuiteResult, VerifyReport
from app.models.scenario import Scenario
from app.models.trajectory import Trajectory
from app.models.channel import LinkState
from app.services.channel_services import ChannelService
from app.services.closed_form_services import ClosedFormService
from app.services.physical_layer_services import PhysicalLayerService
from app.services.scenario_services import ScenarioService

logger = logging.getLogger(__name__)

BER_TARGETS = (0.2, 0.1, 0.05, 0.02)

# Two-sided false-alarm level of a 3-standard-error test
THREE_SIGMA_LEVEL = 2.0 * float(ndtr(-3.0))

# Substream keys for the suites; each suite owns one branch of the seed tree
_SUITE_KEYS = {'phase_coherence': 0, 'jensen_bound': 1, 'ber_formula': 2, 'cascade_moments': 3}


def _suite_rng(seed: int, suite: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_SUITE_KEYS[suite],)))


class VerificationService:
    """Monte-Carlo and analytic oracles for the channel and detection model"""

    @staticmethod
    def random_geometry(base: Scenario, rng: np.random.Generator) -> Tuple[Scenario, LinkState]:
        """
        One-slot scenario with a random IRS layout and UAV position.

        IRS positions are drawn in a 60 m square around the BS, the UAV within 40 m of it.
        """
        K = int(rng.integers(1, 4))
        irs = [tuple(float(v) for v in rng.uniform(-30.0, 30.0, size=2)) for _ in range(K)]
        uav = tuple(float(v) for v in rng.uniform(-40.0, 40.0, size=2))
        s = ScenarioService.with_overrides(
            base, T=1.0, delta=1.0, V_max=0.0, irs_pos=irs, weights=[1.0] * K, q_init=uav, q_final=uav,
        )
        ls = ChannelService.link_state(s, Trajectory(q=np.array([uav, uav]), delta=1.0))
        return s, ls

    @staticmethod
    def phase_coherence(base: Scenario, seed: int, geometries: int = 50) -> SuiteResult:
        """Optimal phases align every reflected LoS term with the direct LoS path"""
        rng = _suite_rng(seed, 'phase_coherence')
        worst_coherence = 0.0
        worst_x0 = 0.0
        for _ in range(geometries):
            s, ls = VerificationService.random_geometry(base, rng)
            phases = ClosedFormService.optimal_phases(ls, s)
            for k in range(s.K):
                h1, h2, h3 = ChannelService.los_components(s, ls, k, 0)
                terms = np.conj(h2) * np.exp(1j * phases.theta[k, 0]) * h1
                coherent = float(np.real(np.sum(terms * np.conj(h3))))
                worst_coherence = max(worst_coherence, abs(coherent - s.M) / max(s.M, 1))
                x0, _ = PhysicalLayerService.deterministic_terms(s, ls, k, 0, phases.theta[k, 0])
                expected = ClosedFormService.x0_sq_opt(ls, s, k, 0)
                worst_x0 = max(worst_x0, abs(abs(x0) ** 2 - expected) / expected)
        worst = max(worst_coherence, worst_x0) / 1e-9
        return SuiteResult(
            name='phase_coherence', passed=worst <= 1.0, cases=geometries, worst=worst,
            statistics={'max_coherence_rel_error': worst_coherence, 'max_x0_rel_error': worst_x0},
        )

    @staticmethod
    def jensen_bound(base: Scenario, seed: int, configs: int = 20, draws: int = 10_000) -> SuiteResult:
        """Mean instantaneous rate never exceeds the rate bound by more than 3 standard errors"""
        rng = _suite_rng(seed, 'jensen_bound')
        worst = -np.inf
        margins = []
        for _ in range(configs):
            s, ls = VerificationService.random_geometry(base, rng)
            k = int(rng.integers(s.K))
            if rng.random() < 0.5:
                phases = ClosedFormService.optimal_phases(ls, s).theta[k, 0]
            else:
                phases = rng.uniform(0.0, 2.0 * np.pi, size=s.M)
            draw = ChannelService.sample_link_draws(s, ls, k, 0, count=draws, rng=rng)
            rate = np.asarray(PhysicalLayerService.primary_rate_exact(s, draw, phases))
            mean = float(np.mean(rate))
            stderr = float(np.std(rate, ddof=1) / np.sqrt(draws))
            x0, _ = PhysicalLayerService.deterministic_terms(s, ls, k, 0, phases)
            bound = PhysicalLayerService.primary_rate_bound(s, ls, abs(x0) ** 2, k, 0)
            margins.append(bound - mean)
            worst = max(worst, (mean - bound) / (3.0 * stderr) if stderr > 0 else (np.inf if mean > bound else -np.inf))
        return SuiteResult(
            name='jensen_bound', passed=bool(worst <= 1.0), cases=configs, worst=float(worst),
            statistics={'min_bound_margin': float(min(margins)), 'mean_bound_margin': float(np.mean(margins))},
        )

    @staticmethod
    def reflect_power_for_ber(target: float, sigma2: float, P: float, L: int) -> float:
        """Reflected power g giving closed-form BER = target: sqrt(L)*x/(x+2) = Q^-1(target), x = P*g/sigma^2"""
        t = -float(ndtri(target))
        if not 0.0 < t < np.sqrt(L):
            raise ValueError(f"BER target {target} is not reachable with L={L}")
        x = 2.0 * t / (np.sqrt(L) - t)
        return x * sigma2 / P

    @staticmethod
    def ber_formula(
        base: Scenario, seed: int, targets: Sequence[float] = BER_TARGETS, symbols: int = 100_000, L: int = 512
    ) -> SuiteResult:
        """Simulated joint-energy-detector BER matches the closed form within 3 standard errors"""
        rng = _suite_rng(seed, 'ber_formula')
        worst = 0.0
        rows = []
        for target in targets:
            g = VerificationService.reflect_power_for_ber(target, base.sigma2, base.P, L)
            stats = PhysicalLayerService.detection_stats(g, base.sigma2, base.P, L)
            closed = float(PhysicalLayerService.ber_closed_form(g, base.sigma2, base.P, L))
            simulated = PhysicalLayerService.ber_monte_carlo_stats(stats, base.rho, symbols, rng)
            stderr = np.sqrt(closed * (1.0 - closed) / symbols)
            deviation = abs(simulated - closed) / (3.0 * stderr)
            worst = max(worst, deviation)
            rows.append({'target': target, 'closed_form': closed, 'monte_carlo': simulated, 'stderr': float(stderr)})
        return SuiteResult(
            name='ber_formula', passed=worst <= 1.0, cases=len(targets), worst=float(worst),
            statistics={'points': rows},
        )

    @staticmethod
    def family_threshold(comparisons: int) -> float:
        """
        Bonferroni-corrected z threshold for a family of two-sided comparisons.

        The family as a whole keeps the false-alarm level of a single 3-standard-error test.
        """
        if comparisons < 1:
            raise ValueError(f"comparisons must be positive, got {comparisons}")
        return max(3.0, -float(ndtri(THREE_SIGMA_LEVEL / (2.0 * comparisons))))

    @staticmethod
    def cascade_moments(base: Scenario, seed: int, configs: int = 5, draws: int = 100_000) -> SuiteResult:
        """Second moments of the zero-mean channel terms match their analytic values within 3 standard errors"""
        rng = _suite_rng(seed, 'cascade_moments')
        scores = []
        for _ in range(configs):
            s, ls = VerificationService.random_geometry(base, rng)
            k = int(rng.integers(s.K))
            phases = rng.uniform(0.0, 2.0 * np.pi, size=s.M)
            draw = ChannelService.sample_link_draws(s, ls, k, 0, count=draws, rng=rng)
            terms = ChannelService.cascade_terms(s, ls, k, 0, phases, draw)
            analytic = ChannelService.cascade_moments(s, ls, k, 0)
            for name, expected in analytic.items():
                power = np.abs(terms[name]) ** 2
                stderr = float(np.std(power, ddof=1) / np.sqrt(draws))
                scores.append(abs(float(np.mean(power)) - expected) / stderr)

            # E|h|^2 splits into |x0|^2 plus the term powers (cross terms vanish)
            total = np.abs(draw.combined(phases)) ** 2
            expected_total = abs(complex(terms['x0'].flat[0])) ** 2 + sum(analytic.values())
            stderr = float(np.std(total, ddof=1) / np.sqrt(draws))
            scores.append(abs(float(np.mean(total)) - expected_total) / stderr)

        threshold = VerificationService.family_threshold(len(scores))
        max_z = float(max(scores))
        return SuiteResult(
            name='cascade_moments', passed=max_z <= threshold, cases=configs, worst=max_z / threshold,
            statistics={'comparisons': len(scores), 'threshold': threshold, 'max_z': max_z},
        )


    @staticmethod
    def run_all(base: Scenario, seed: int, quick: bool = False) -> VerifyReport:
        """
        Run every suite with substreams of one seed.

        Args:
            base: Scenario supplying powers, gains and Rician factors
            seed: Root seed
            quick: Smaller sample sizes for smoke runs

        Returns:
            VerifyReport: Deterministic for a given (base, seed, quick)
        """
        suites: List[Callable[[], SuiteResult]] = [
            lambda: VerificationService.phase_coherence(base, seed, geometries=10 if quick else 50),
            lambda: VerificationService.jensen_bound(base, seed, configs=5 if quick else 20, draws=2_000 if quick else 10_000),
            lambda: VerificationService.ber_formula(base, seed, symbols=20_000 if quick else 100_000),
            lambda: VerificationService.cascade_moments(base, seed, configs=2 if quick else 5,
                                                         draws=20_000 if quick else 100_000),
        ]
        report = VerifyReport(seed=seed)
        for run in suites:
            result = run()
            level = logging.INFO if result.passed else logging.WARNING
            logger.log(level, f"{result.name}: {'pass' if result.passed else 'FAIL'} (worst {result.worst:.3g}, {result.cases} cases)")
            report.suites.append(result)
        return report

    @staticmethod
    def write_report(report: VerifyReport, path: Union[str, Path]) -> Path:
        """Write verify_report.json with sorted keys so equal reports give equal bytes"""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            payload = {**report.model_dump(mode='json'), 'passed': report.passed}
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n', encoding='utf-8')
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise IoError(f"cannot write {path}: {e}") from e
        return path


__all__ = ['VerificationService', 'BER_TARGETS']
