from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Optional, Tuple
import math

import numpy as np

from app.errors import ValidationError

Point = Tuple[float, float]

SPEED_OF_LIGHT = 299_792_458.0


class AlgorithmSettings(BaseModel):
    """Tolerances and iteration limits shared by both design algorithms"""
    r_max: int = Field(300, ge=1, description="AO iteration cap")
    eps1: float = Field(1e-3, gt=0, description="Fractional objective change that stops the AO loop")
    eps2: float = Field(1e-10, gt=0, description="Binariness violation that stops the penalty outer loop")
    eta0: float = Field(500.0, gt=0, description="Initial penalty coefficient")
    c_scale: float = Field(0.7, gt=0, lt=1, description="Penalty coefficient shrink factor")
    outer_cap: int = Field(200, ge=1, description="Penalty outer-iteration cap")
    binary_snap_tol: float = Field(1e-4, ge=0, lt=0.5, description="Penalty iterates this close to 0 or 1 are snapped")
    sca_tol: float = Field(1e-6, gt=0, description="Relative surrogate improvement that stops SCA re-linearisation")
    sca_max_iter: int = Field(4, ge=1, description="Taylor re-linearisations per trajectory update")
    lp_tol: float = Field(1e-9, gt=0)
    qp_tol: float = Field(1e-10, gt=0)
    barrier_mu0: float = Field(1.0, gt=0)
    barrier_factor: float = Field(10.0, gt=1)
    barrier_tol: float = Field(1e-8, gt=0)
    newton_tol: float = Field(1e-10, gt=0)
    max_newton_iter: int = Field(100, ge=1)

    model_config = ConfigDict(frozen=True, extra='forbid')


class ScenarioFile(BaseModel):
    """On-disk scenario format. Powers and gains are in dB / dBm."""
    name: str = Field("scenario", description="Free-form label copied into result summaries")
    bs_position: Point = Field((0.0, 0.0), description="BS ground coordinates (m)")
    bs_altitude: float = Field(10.0, ge=0, description="BS antenna height H_b (m)")
    irs_positions: List[Point] = Field(..., min_length=1, description="IRS ground coordinates (m)")
    irs_altitude: float = Field(10.0, ge=0, description="IRS height H_s (m)")
    uav_altitude: float = Field(30.0, gt=0, description="UAV flight altitude H_u (m)")
    q_init: Point = Field(..., description="UAV start point (m)")
    q_final: Point = Field(..., description="UAV end point (m)")
    v_max: float = Field(10.0, ge=0, description="Maximum UAV speed (m/s)")
    slot_duration: float = Field(0.1, gt=0, description="Slot length delta (s)")
    period: float = Field(40.0, gt=0, description="Flight period T (s)")
    elements: int = Field(50, ge=0, description="Reflecting elements per IRS")
    transmit_power_dbm: float = 20.0
    noise_power_dbm: float = -60.0
    reference_gain_db: float = -30.0
    path_loss_exponents: Tuple[float, float, float] = Field(
        (2.4, 2.4, 2.4), description="UAV-IRS, IRS-BS and UAV-BS exponents"
    )
    rician_factors_db: Tuple[Optional[float], Optional[float], Optional[float]] = Field(
        (10.0, 10.0, 10.0), description="Rician factors in dB; null means pure Rayleigh (K=0)"
    )
    carrier_frequency_hz: float = Field(755e6, gt=0)
    wavelength: Optional[float] = Field(None, gt=0, description="Overrides the carrier-derived wavelength (m)")
    spacing_ratio: float = Field(0.5, gt=0, description="Element spacing over wavelength")
    rho: float = Field(0.5, ge=0, le=1, description="Prior probability of IRS symbol 1")
    symbols_per_irs_symbol: int = Field(512, ge=1, description="L")
    irs_symbols_per_block: int = Field(100, ge=1, description="N1, stored for completeness")
    rate_threshold: float = Field(3.0, ge=0, description="Minimum primary rate R_th (bps/Hz)")
    weights: Optional[List[float]] = Field(None, description="Per-IRS weights, defaults to all ones")
    utility_prefactor: Optional[float] = Field(None, gt=0, description="Defaults to L*P")
    rng_seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    algorithm: AlgorithmSettings = Field(default_factory=AlgorithmSettings)

    model_config = ConfigDict(extra='forbid')

    @field_validator('path_loss_exponents')
    @classmethod
    def exponents_positive(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(a <= 0 for a in v):
            raise ValueError('path-loss exponents must be positive')
        return v

    @field_validator('weights')
    @classmethod
    def weights_non_negative(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(w < 0 for w in v):
            raise ValueError('weights must be non-negative')
        return v


class Scenario(BaseModel):
    """
    Immutable problem instance with every quantity in linear units.

    Slot n (0-based) uses trajectory point q[n+1]; q[0] is the start point.
    """
    name: str = "scenario"
    M: int = Field(..., ge=0)
    delta: float = Field(..., gt=0)
    T: float = Field(..., gt=0)
    bs_pos: Point
    H_b: float = Field(..., ge=0)
    irs_pos: Tuple[Point, ...] = Field(..., min_length=1)
    H_s: float = Field(..., ge=0)
    H_u: float = Field(..., gt=0)
    q_init: Point
    q_final: Point
    V_max: float = Field(..., ge=0)
    P: float
    sigma2: float
    beta0: float
    alpha1: float = Field(..., gt=0)
    alpha2: float = Field(..., gt=0)
    alpha3: float = Field(..., gt=0)
    K1: float = Field(..., ge=0)
    K2: float = Field(..., ge=0)
    K3: float = Field(..., ge=0)
    d_over_lambda: float = Field(..., gt=0)
    wavelength: float = Field(..., gt=0)
    rho: float = Field(..., ge=0, le=1)
    L: int = Field(..., ge=1)
    N1: int = Field(100, ge=1)
    R_th: float = Field(..., ge=0)
    weights: Tuple[float, ...]
    utility_prefactor: Optional[float] = Field(None, gt=0)
    rng_seed: int = Field(..., ge=0, lt=2 ** 64)
    algo: AlgorithmSettings = Field(default_factory=AlgorithmSettings)

    model_config = ConfigDict(frozen=True, extra='forbid')

    @model_validator(mode='after')
    def check_invariants(self) -> 'Scenario':
        for field in ('P', 'sigma2', 'beta0'):
            value = getattr(self, field)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(field, f"{field} must be strictly positive after dB conversion, got {value}")

        n_slots = round(self.T / self.delta)
        if n_slots < 1 or abs(n_slots * self.delta - self.T) > 1e-9 * max(1.0, self.T):
            raise ValidationError('T', f"period T={self.T} is not an integer number of slots of {self.delta} s")

        if self.H_u <= max(self.H_s, self.H_b):
            raise ValidationError('H_u', "UAV altitude must exceed both the IRS and the BS altitude")

        span = math.dist(self.q_init, self.q_final)
        if span > n_slots * self.V_max * self.delta + 1e-9:
            raise ValidationError(
                'q_final', f"end point is {span:.3f} m away but at most {n_slots * self.V_max * self.delta:.3f} m can be flown"
            )

        if len(self.weights) != len(self.irs_pos):
            raise ValidationError('weights', f"expected {len(self.irs_pos)} weights, got {len(self.weights)}")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise ValidationError('weights', "weights must be finite and non-negative")

        for k, pos in enumerate(self.irs_pos):
            if math.dist(pos, self.bs_pos) == 0.0 and self.H_s == self.H_b:
                raise ValidationError('irs_pos', f"IRS {k} coincides with the BS")

        return self

    @property
    def K(self) -> int:
        return len(self.irs_pos)

    @property
    def N(self) -> int:
        return round(self.T / self.delta)

    @property
    def d_spacing(self) -> float:
        return self.d_over_lambda * self.wavelength

    @property
    def s_pref(self) -> float:
        """Utility prefactor; L*P unless configured"""
        if self.utility_prefactor is not None:
            return self.utility_prefactor
        return self.L * self.P

    @property
    def irs_xy(self) -> np.ndarray:
        return np.asarray(self.irs_pos, dtype=float)

    @property
    def bs_xy(self) -> np.ndarray:
        return np.asarray(self.bs_pos, dtype=float)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


__all__ = ['AlgorithmSettings', 'ScenarioFile', 'Scenario', 'SPEED_OF_LIGHT', 'Point']
