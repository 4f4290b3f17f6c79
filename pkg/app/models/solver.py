from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Callable, List, Optional, Union
from enum import Enum

import numpy as np
import scipy.sparse as sp

Matrix = Union[np.ndarray, sp.spmatrix, sp.sparray]


class SolverStatus(str, Enum):
    OPTIMAL = "Optimal"
    STALLED = "Stalled"


def _as_vector(v) -> Optional[np.ndarray]:
    if v is None:
        return None
    return np.atleast_1d(np.asarray(v, dtype=float))


def _as_matrix(v) -> Optional[np.ndarray]:
    if v is None:
        return None
    return np.atleast_2d(np.asarray(v, dtype=float))


class LinearProgram(BaseModel):
    """optimise c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub"""
    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = Field(None, description="Lower bounds, -inf for free; defaults to 0")
    ub: Optional[np.ndarray] = Field(None, description="Upper bounds, +inf when absent")
    maximize: bool = False

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('c', 'b_ub', 'b_eq', 'lb', 'ub', mode='before')
    @classmethod
    def vectors(cls, v):
        return _as_vector(v)

    @field_validator('A_ub', 'A_eq', mode='before')
    @classmethod
    def matrices(cls, v):
        return _as_matrix(v)

    @model_validator(mode='after')
    def check_dimensions(self) -> 'LinearProgram':
        n = self.c.size
        for A, b, label in ((self.A_ub, self.b_ub, 'ub'), (self.A_eq, self.b_eq, 'eq')):
            if (A is None) != (b is None):
                raise ValueError(f"A_{label} and b_{label} must be given together")
            if A is not None and (A.shape[1] != n or A.shape[0] != b.size):
                raise ValueError(f"A_{label} has shape {A.shape}, expected ({b.size}, {n})")
        for bound in (self.lb, self.ub):
            if bound is not None and bound.size != n:
                raise ValueError("bounds must match the number of variables")
        arrays = [self.c] + [x for x in (self.A_ub, self.b_ub, self.A_eq, self.b_eq) if x is not None]
        if not all(np.all(np.isfinite(x)) for x in arrays):
            raise ValueError("LP coefficients must be finite")
        return self

    @property
    def n(self) -> int:
        return self.c.size

    def lower(self) -> np.ndarray:
        return np.zeros(self.n) if self.lb is None else self.lb

    def upper(self) -> np.ndarray:
        return np.full(self.n, np.inf) if self.ub is None else self.ub

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def max_violation(self, x: np.ndarray) -> float:
        parts = [0.0, float(np.max(self.lower() - x, initial=0.0)), float(np.max(x - self.upper(), initial=0.0))]
        if self.A_ub is not None:
            parts.append(float(np.max(self.A_ub @ x - self.b_ub, initial=0.0)))
        if self.A_eq is not None:
            parts.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq), initial=0.0)))
        return max(parts)


class LPResult(BaseModel):
    x: np.ndarray
    objective: float
    status: SolverStatus = SolverStatus.OPTIMAL
    iterations: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True)


class QuadraticProgram(BaseModel):
    """minimise 1/2 x^T Q x + c^T x  s.t.  G x <= h,  lb <= x <= ub"""
    Q: np.ndarray = Field(..., description="(n, n) positive semidefinite, or (n,) diagonal")
    c: np.ndarray
    G: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('c', 'h', 'lb', 'ub', mode='before')
    @classmethod
    def vectors(cls, v):
        return _as_vector(v)

    @field_validator('Q', mode='before')
    @classmethod
    def dense_q(cls, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.diag(v) if v.ndim == 1 else np.atleast_2d(v)

    @field_validator('G', mode='before')
    @classmethod
    def dense_g(cls, v) -> Optional[np.ndarray]:
        return _as_matrix(v)

    @model_validator(mode='after')
    def check_dimensions(self) -> 'QuadraticProgram':
        n = self.c.size
        if self.Q.shape != (n, n):
            raise ValueError(f"Q has shape {self.Q.shape}, expected ({n}, {n})")
        if (self.G is None) != (self.h is None):
            raise ValueError("G and h must be given together")
        if self.G is not None and self.G.shape != (self.h.size, n):
            raise ValueError(f"G has shape {self.G.shape}, expected ({self.h.size}, {n})")
        return self

    @property
    def n(self) -> int:
        return self.c.size

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x)


class QPResult(BaseModel):
    x: np.ndarray
    objective: float
    multipliers: np.ndarray
    stationarity: float
    status: SolverStatus = SolverStatus.OPTIMAL
    iterations: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True)


class ConstraintBlock(BaseModel):
    """
    A vector of smooth convex constraints g(x) <= 0.

    values(x) -> (m,), jacobian(x) -> (m, n), hessian(x, w) -> (n, n) = sum_i w_i * Hess g_i(x).
    """
    name: str
    values: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], Matrix]
    hessian: Optional[Callable[[np.ndarray, np.ndarray], Matrix]] = Field(
        None, description="Omit for affine blocks"
    )

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class SmoothConvexProgram(BaseModel):
    """
    maximise f(x) (concave)  s.t.  every block g(x) <= 0 (convex),  A_eq x = b_eq.

    f is given by value, gradient and Hessian callables; x0 must be strictly feasible.
    """
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], Matrix]
    constraints: List[ConstraintBlock] = Field(default_factory=list)
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    x0: np.ndarray
    name: str = "program"

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator('x0', 'b_eq', mode='before')
    @classmethod
    def vectors(cls, v):
        return _as_vector(v)

    @field_validator('A_eq', mode='before')
    @classmethod
    def matrices(cls, v):
        return _as_matrix(v)

    @property
    def n(self) -> int:
        return self.x0.size


class BarrierResult(BaseModel):
    x: np.ndarray
    objective: float
    status: SolverStatus = SolverStatus.OPTIMAL
    newton_steps: int = 0
    barrier_stages: int = 0
    gap_bound: float = 0.0

    model_config = ConfigDict(arbitrary_types_allowed=True)


__all__ = [
    'SolverStatus',
    'LinearProgram',
    'LPResult',
    'QuadraticProgram',
    'QPResult',
    'ConstraintBlock',
    'SmoothConvexProgram',
    'BarrierResult',
]
