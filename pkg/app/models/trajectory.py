from pydantic import BaseModel, ConfigDict, Field, field_validator

import numpy as np


class Trajectory(BaseModel):
    """UAV waypoints q[0..N] in the horizontal plane, one slot of delta seconds between points"""
    q: np.ndarray = Field(..., description="(N+1, 2) positions in metres")
    delta: float = Field(..., gt=0, description="Slot duration (s)")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('q', mode='before')
    @classmethod
    def check_shape(cls, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise ValueError(f"trajectory must be an (N+1, 2) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("trajectory contains non-finite coordinates")
        v.setflags(write=False)
        return v

    @property
    def N(self) -> int:
        return self.q.shape[0] - 1

    @property
    def slot_positions(self) -> np.ndarray:
        """Position used in each slot, q[1..N]"""
        return self.q[1:]

    def step_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.q, axis=0), axis=1)

    def speeds(self) -> np.ndarray:
        """Per-point speed profile; point 0 has no incoming segment and reports 0"""
        return np.concatenate([[0.0], self.step_lengths() / self.delta])

    def mean_distance_to(self, point) -> float:
        return float(np.mean(np.linalg.norm(self.slot_positions - np.asarray(point, dtype=float), axis=1)))


class Schedule(BaseModel):
    """IRS association a[k, n], relaxed to [0, 1] or binary"""
    a: np.ndarray = Field(..., description="(K, N) association matrix")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('a', mode='before')
    @classmethod
    def check_matrix(cls, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"schedule must be a (K, N) matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("schedule contains non-finite entries")
        v.setflags(write=False)
        return v

    @property
    def K(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.a.shape[1]

    def slot_sums(self) -> np.ndarray:
        return self.a.sum(axis=0)

    def binary_gap(self) -> float:
        """max over entries of min(a, 1 - a); zero for a binary schedule"""
        return float(np.max(np.minimum(np.abs(self.a), np.abs(1.0 - self.a))))

    def is_binary(self, tol: float = 1e-6) -> bool:
        return self.binary_gap() <= tol

    @classmethod
    def uniform(cls, K: int, N: int) -> 'Schedule':
        return cls(a=np.full((K, N), 1.0 / K))


class PhaseSchedule(BaseModel):
    """IRS phase shifts theta[k, n, m] in [0, 2*pi)"""
    theta: np.ndarray = Field(..., description="(K, N, M) phase shifts in radians")

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('theta', mode='before')
    @classmethod
    def reduce_mod_two_pi(cls, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=float)
        if v.ndim != 3:
            raise ValueError(f"phase schedule must be (K, N, M), got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("phase schedule contains non-finite angles")
        v = np.mod(v, 2.0 * np.pi)
        # np.mod can return exactly 2*pi for tiny negative inputs
        v[v >= 2.0 * np.pi] = 0.0
        v.setflags(write=False)
        return v

    @classmethod
    def constant(cls, K: int, N: int, M: int, theta0: float) -> 'PhaseSchedule':
        return cls(theta=np.full((K, N, M), float(theta0)))


__all__ = ['Trajectory', 'Schedule', 'PhaseSchedule']
