from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Optional

import numpy as np


class LinkState(BaseModel):
    """
    Per-slot large-scale quantities derived from a trajectory.

    Arrays indexed [k, n] depend on the UAV position in slot n; arrays indexed [k]
    describe the static IRS-BS hop; arrays indexed [n] describe the direct UAV-BS link.
    """
    uav_xy: np.ndarray = Field(..., description="(N, 2) UAV position used in each slot")
    d1: np.ndarray = Field(..., description="(K, N) UAV-IRS distance (m)")
    d2: np.ndarray = Field(..., description="(K,) IRS-BS distance (m)")
    d3: np.ndarray = Field(..., description="(N,) UAV-BS distance (m)")
    beta1: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray
    cos_phi1: np.ndarray = Field(..., description="(K, N) AoA cosine at the IRS")
    cos_phi2: np.ndarray = Field(..., description="(K,) AoD cosine at the IRS")
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('*', mode='before')
    @classmethod
    def as_readonly_array(cls, v):
        v = np.array(v, dtype=float)
        v.setflags(write=False)
        return v

    @property
    def K(self) -> int:
        return self.d1.shape[0]

    @property
    def N(self) -> int:
        return self.d1.shape[1]


class ChannelDraw(BaseModel):
    """
    One Rician realisation (or a batch of them along leading axes).

    h1: UAV-IRS vector, h2: IRS-BS vector, h3: direct UAV-BS scalar.
    """
    h1: np.ndarray = Field(..., description="(..., M) complex")
    h2: np.ndarray = Field(..., description="(..., M) complex")
    h3: np.ndarray = Field(..., description="(...) complex")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('h1', 'h2', 'h3', mode='before')
    @classmethod
    def as_complex(cls, v):
        return np.asarray(v, dtype=complex)

    def reflected(self, phases: np.ndarray) -> np.ndarray:
        """h2^H diag(exp(j*theta)) h1 along the element axis"""
        return np.sum(np.conj(self.h2) * np.exp(1j * np.asarray(phases)) * self.h1, axis=-1)

    def combined(self, phases: np.ndarray) -> np.ndarray:
        return self.h3 + self.reflected(phases)


class DetectionStats(BaseModel):
    """Received-energy statistics of the joint energy detector"""
    sigma1_sq: float = Field(..., gt=0, description="Per-sample energy when the IRS reflects (W)")
    sigma0_sq: float = Field(..., gt=0, description="Per-sample energy when the IRS absorbs (W)")
    L: int = Field(..., ge=1, description="Samples per IRS symbol")
    threshold: Optional[float] = Field(None, description="Decision threshold on the summed energy")

    model_config = ConfigDict(frozen=True)


__all__ = ['LinkState', 'ChannelDraw', 'DetectionStats']
