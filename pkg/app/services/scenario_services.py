from typing import Any, Callable, Dict, Optional
from pathlib import Path
import csv
import json
import logging
import math

import numpy as np
import pydantic

from app.config import runner_config
from app.errors import IoError, ParseError, ValidationError
from app.models.scenario import AlgorithmSettings, Scenario, ScenarioFile, SPEED_OF_LIGHT
from app.models.report import SolveReport
from app.models.trajectory import Schedule, Trajectory

logger = logging.getLogger(__name__)

DEFAULT_IRS_POSITIONS = ((30.0, 30.0), (-30.0, 30.0), (-40.0, 0.0), (-30.0, -30.0), (30.0, -30.0))


def to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watt(x_dbm: float) -> float:
    return to_linear(x_dbm - 30.0)


def watt_to_dbm(x_watt: float) -> float:
    return to_db(x_watt) + 30.0


def _fmt(x: float) -> str:
    return format(float(x), '.17g')


def _field_error(exc: pydantic.ValidationError) -> ValidationError:
    first = exc.errors()[0]
    field = '.'.join(str(part) for part in first.get('loc', ())) or 'scenario'
    return ValidationError(field, f"{field}: {first.get('msg', 'invalid value')}")


def _exact_inverse(forward: Callable[[float], float], inverse: Callable[[float], float], target: float) -> float:
    """
    Inverse value whose forward image reproduces target bit-for-bit.

    Walks a few ulps around the analytic inverse; falls back to it when no
    neighbour round-trips exactly.
    """
    guess = inverse(target)
    if forward(guess) == target:
        return guess
    up = down = guess
    for _ in range(64):
        up = math.nextafter(up, math.inf)
        if forward(up) == target:
            return up
        down = math.nextafter(down, -math.inf)
        if forward(down) == target:
            return down
    return guess


class ScenarioService:
    """Service layer for scenario definition, persistence and result artifacts"""

    @staticmethod
    def from_file_model(cfg: ScenarioFile) -> Scenario:
        """
        Convert the dB-form file model into a linear Scenario.

        Args:
            cfg: Validated file model

        Returns:
            Scenario: Immutable linear-unit scenario

        Raises:
            ValidationError: If a cross-field invariant is violated
        """
        wavelength = cfg.wavelength if cfg.wavelength is not None else SPEED_OF_LIGHT / cfg.carrier_frequency_hz
        K1, K2, K3 = (0.0 if k is None else to_linear(k) for k in cfg.rician_factors_db)
        weights = cfg.weights if cfg.weights is not None else [1.0] * len(cfg.irs_positions)
        seed = cfg.rng_seed if cfg.rng_seed is not None else runner_config.default_seed
        try:
            return Scenario(
                name=cfg.name,
                M=cfg.elements,
                delta=cfg.slot_duration,
                T=cfg.period,
                bs_pos=cfg.bs_position,
                H_b=cfg.bs_altitude,
                irs_pos=tuple(tuple(p) for p in cfg.irs_positions),
                H_s=cfg.irs_altitude,
                H_u=cfg.uav_altitude,
                q_init=cfg.q_init,
                q_final=cfg.q_final,
                V_max=cfg.v_max,
                P=dbm_to_watt(cfg.transmit_power_dbm),
                sigma2=dbm_to_watt(cfg.noise_power_dbm),
                beta0=to_linear(cfg.reference_gain_db),
                alpha1=cfg.path_loss_exponents[0],
                alpha2=cfg.path_loss_exponents[1],
                alpha3=cfg.path_loss_exponents[2],
                K1=K1,
                K2=K2,
                K3=K3,
                d_over_lambda=cfg.spacing_ratio,
                wavelength=wavelength,
                rho=cfg.rho,
                L=cfg.symbols_per_irs_symbol,
                N1=cfg.irs_symbols_per_block,
                R_th=cfg.rate_threshold,
                weights=tuple(weights),
                utility_prefactor=cfg.utility_prefactor,
                rng_seed=seed,
                algo=cfg.algorithm,
            )
        except pydantic.ValidationError as e:
            raise _field_error(e) from e

    @staticmethod
    def to_file_model(s: Scenario) -> ScenarioFile:
        """Express a Scenario in the dB file format so that reloading reproduces it exactly"""

        def rician_db(k: float) -> Optional[float]:
            return None if k == 0.0 else _exact_inverse(to_linear, to_db, k)

        return ScenarioFile(
            name=s.name,
            bs_position=s.bs_pos,
            bs_altitude=s.H_b,
            irs_positions=[tuple(p) for p in s.irs_pos],
            irs_altitude=s.H_s,
            uav_altitude=s.H_u,
            q_init=s.q_init,
            q_final=s.q_final,
            v_max=s.V_max,
            slot_duration=s.delta,
            period=s.T,
            elements=s.M,
            transmit_power_dbm=_exact_inverse(dbm_to_watt, watt_to_dbm, s.P),
            noise_power_dbm=_exact_inverse(dbm_to_watt, watt_to_dbm, s.sigma2),
            reference_gain_db=_exact_inverse(to_linear, to_db, s.beta0),
            path_loss_exponents=(s.alpha1, s.alpha2, s.alpha3),
            rician_factors_db=(rician_db(s.K1), rician_db(s.K2), rician_db(s.K3)),
            wavelength=s.wavelength,
            spacing_ratio=s.d_over_lambda,
            rho=s.rho,
            symbols_per_irs_symbol=s.L,
            irs_symbols_per_block=s.N1,
            rate_threshold=s.R_th,
            weights=list(s.weights),
            utility_prefactor=s.utility_prefactor,
            rng_seed=s.rng_seed,
            algorithm=s.algo,
        )

    @staticmethod
    def load_scenario(path: str | Path) -> Scenario:
        """
        Load and validate a scenario file.

        Args:
            path: JSON scenario file

        Returns:
            Scenario: Validated scenario with dB quantities converted to linear

        Raises:
            IoError: If the file cannot be read
            ParseError: If the file is not valid JSON
            ValidationError: If a field violates its invariant (names the field)
        """
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            logger.error(f"Cannot read scenario {path}: {e}")
            raise IoError(f"cannot read scenario file {path}: {e}") from e

        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            logger.error(f"Malformed scenario {path}: {e}")
            raise ParseError(f"{path}: {e}") from e
        if not isinstance(raw, dict):
            raise ParseError(f"{path}: top-level value must be a JSON object")

        try:
            cfg = ScenarioFile.model_validate(raw)
        except pydantic.ValidationError as e:
            err = _field_error(e)
            logger.error(f"Invalid scenario {path}: {err}")
            raise err from e

        scenario = ScenarioService.from_file_model(cfg)
        logger.info(f"Loaded scenario '{scenario.name}' from {path}: K={scenario.K}, M={scenario.M}, N={scenario.N}")
        return scenario

    @staticmethod
    def default_scenario() -> Scenario:
        """Five-IRS reference deployment with the UAV starting and ending at [15, 0]"""
        cfg = ScenarioFile(
            name="default",
            irs_positions=list(DEFAULT_IRS_POSITIONS),
            q_init=(15.0, 0.0),
            q_final=(15.0, 0.0),
        )
        return ScenarioService.from_file_model(cfg)

    @staticmethod
    def save_scenario(s: Scenario, path: str | Path) -> None:
        """
        Write the scenario in its dB file format.

        Raises:
            IoError: If the file cannot be written
        """
        path = Path(path)
        payload = ScenarioService.to_file_model(s).model_dump(mode='json')
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(payload, indent=2) + '\n', encoding='utf-8')
        except OSError as e:
            logger.error(f"Failed to save scenario to {path}: {e}")
            raise IoError(f"cannot write scenario file {path}: {e}") from e

    @staticmethod
    def with_overrides(s: Scenario, **fields: Any) -> Scenario:
        """
        Copy of s with some fields replaced; the copy is re-validated.

        Raises:
            ValidationError: If the new combination violates an invariant
        """
        data = s.model_dump()
        data.update(fields)
        try:
            return Scenario.model_validate(data)
        except pydantic.ValidationError as e:
            raise _field_error(e) from e

    @staticmethod
    def coarse(s: Scenario) -> Scenario:
        """Desk-scale profile: one-second slots so N equals T"""
        return ScenarioService.with_overrides(s, delta=1.0)

    @staticmethod
    def with_algorithm(s: Scenario, **settings: Any) -> Scenario:
        try:
            algo = AlgorithmSettings.model_validate({**s.algo.model_dump(), **settings})
        except pydantic.ValidationError as e:
            raise _field_error(e) from e
        return ScenarioService.with_overrides(s, algo=algo)

    @staticmethod
    def check_slot_length(s: Scenario) -> bool:
        """
        Warn when a slot is long enough for the channel to change within it (V_max*delta > 0.2*H_u).

        Returns:
            bool: True when the slot length is within the rule of thumb
        """
        step = s.V_max * s.delta
        if step > 0.2 * s.H_u:
            logger.warning(
                f"V_max*delta = {step:.3f} m exceeds 0.2*H_u = {0.2 * s.H_u:.3f} m; "
                "the per-slot constant-channel assumption is loose"
            )
            return False
        return True

    @staticmethod
    def describe(s: Scenario) -> Dict[str, Any]:
        """Scenario in both unit systems for display"""
        return {
            'linear': {
                **s.model_dump(mode='json'),
                'K': s.K,
                'N': s.N,
                's_pref': s.s_pref,
                'd_spacing': s.d_spacing,
            },
            'db': ScenarioService.to_file_model(s).model_dump(mode='json'),
        }

    @staticmethod
    def save_results(report: SolveReport, traj: Trajectory, sched: Schedule, path: str | Path) -> Dict[str, Path]:
        """
        Persist a design run as CSV tables plus a JSON summary.

        Args:
            report: Solve report with traces
            traj: Final trajectory (N+1 points)
            sched: Final schedule (K x N)
            path: Output directory, created if needed

        Returns:
            Dict[str, Path]: Written files by table name

        Raises:
            ValueError: If trajectory and schedule disagree on N
            IoError: If any file cannot be written
        """
        if traj.N != sched.N:
            raise ValueError(f"trajectory has {traj.N} slots but schedule has {sched.N}")

        out = Path(path)
        files = {
            'trajectory': out / 'trajectory.csv',
            'schedule': out / 'schedule.csv',
            'trace': out / 'trace.csv',
            'summary': out / 'summary.json',
            'timing': out / 'timing.json',
        }
        if report.outer_trace:
            files['outer'] = out / 'outer.csv'

        speeds = traj.speeds()
        xi_trace = list(report.xi_trace) + [None] * (len(report.objective_trace) - len(report.xi_trace))
        summary = {**report.summary(), 'K': sched.K, 'N': sched.N}

        try:
            out.mkdir(parents=True, exist_ok=True)
            with open(files['trajectory'], 'w', newline='', encoding='utf-8') as fh:
                writer = csv.writer(fh, lineterminator='\n')
                writer.writerow(['n', 'x', 'y', 'speed'])
                for n, (x, y) in enumerate(traj.q):
                    writer.writerow([n, _fmt(x), _fmt(y), _fmt(speeds[n])])

            with open(files['schedule'], 'w', newline='', encoding='utf-8') as fh:
                writer = csv.writer(fh, lineterminator='\n')
                writer.writerow(['n', 'k', 'a'])
                for n in range(sched.N):
                    for k in range(sched.K):
                        writer.writerow([n, k, _fmt(sched.a[k, n])])

            with open(files['trace'], 'w', newline='', encoding='utf-8') as fh:
                writer = csv.writer(fh, lineterminator='\n')
                writer.writerow(['iter', 'objective', 'xi'])
                for i, (obj, xi) in enumerate(zip(report.objective_trace, xi_trace)):
                    writer.writerow([i, _fmt(obj), '' if xi is None else _fmt(xi)])

            if report.outer_trace:
                with open(files['outer'], 'w', newline='', encoding='utf-8') as fh:
                    writer = csv.writer(fh, lineterminator='\n')
                    writer.writerow(['outer', 'eta', 'xi', 'objective'])
                    for i, rec in enumerate(report.outer_trace):
                        writer.writerow([i, _fmt(rec.eta), _fmt(rec.xi), _fmt(rec.objective)])

            files['summary'].write_text(json.dumps(summary, indent=2, sort_keys=True) + '\n', encoding='utf-8')
            files['timing'].write_text(json.dumps({'wall_time_s': report.wall_time_s}) + '\n', encoding='utf-8')
        except OSError as e:
            logger.error(f"Failed to write results to {out}: {e}")
            raise IoError(f"cannot write results to {out}: {e}") from e

        logger.info(f"Results written to {out}")
        return files

    @staticmethod
    def write_rows(path: str | Path, header: list, rows: list) -> Path:
        """CSV writer shared by the benchmark and verification artifacts"""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='', encoding='utf-8') as fh:
                writer = csv.writer(fh, lineterminator='\n')
                writer.writerow(header)
                for row in rows:
                    writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise IoError(f"cannot write {path}: {e}") from e
        return path


__all__ = [
    'ScenarioService',
    'DEFAULT_IRS_POSITIONS',
    'to_db',
    'to_linear',
    'dbm_to_watt',
    'watt_to_dbm',
]
