from pydantic import BaseModel, ConfigDict, Field
from typing import Any, Dict, List, Optional
from enum import Enum

import numpy as np


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"
    NON_CONVERGED = "NonConverged"


class OuterRecord(BaseModel):
    """One outer iteration of the penalty method"""
    eta: float
    xi: float
    objective: float
    inner_iterations: int = 0


class SolveReport(BaseModel):
    """Traces and termination data of one design run"""
    algorithm: str = Field(..., description="wsb or fair")
    objective_trace: List[float] = Field(default_factory=list)
    xi_trace: List[Optional[float]] = Field(
        default_factory=list, description="Violation at the outer iteration each trace entry belongs to"
    )
    outer_trace: List[OuterRecord] = Field(default_factory=list)
    iterations: int = 0
    outer_iterations: int = 0
    status: SolveStatus = SolveStatus.MAX_ITER
    objective: float = 0.0
    flags: List[str] = Field(default_factory=list, description="Diagnostics such as NonBinary")
    wall_time_s: float = 0.0

    def is_monotone(self, maximize: bool = True, slack: float = 1e-8) -> bool:
        trace = np.asarray(self.objective_trace, dtype=float)
        if trace.size < 2:
            return True
        steps = np.diff(trace)
        return bool(np.all(steps >= -slack) if maximize else np.all(steps <= slack))

    def summary(self) -> dict:
        """Deterministic summary; wall time is left out so reruns compare byte-for-byte"""
        return {
            'algorithm': self.algorithm,
            'status': self.status.value,
            'iterations': self.iterations,
            'outer_iterations': self.outer_iterations,
            'objective': self.objective,
            'flags': list(self.flags),
            'final_xi': self.outer_trace[-1].xi if self.outer_trace else None,
        }


class PenaltyState(BaseModel):
    """Working state of the penalty method"""
    eta: float = Field(..., gt=0)
    a: np.ndarray
    a_bar: np.ndarray
    R: float = 0.0
    xi: float = float('inf')
    inner_iter: int = 0
    outer_iter: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True)


class ComparisonRow(BaseModel):
    """One benchmark value: a scheme evaluated under one objective at one sweep point"""
    sweep: Optional[str] = Field(None, description="Swept parameter (T or M), None for a single run")
    value: Optional[float] = Field(None, description="Sweep point")
    scheme: str
    objective: str = Field(..., description="wsb or fair")
    utility: float


class SuiteResult(BaseModel):
    """Outcome of one verification suite"""
    name: str
    passed: bool
    cases: int
    worst: float = Field(..., description="Largest normalised deviation (1.0 is the pass limit)")
    statistics: Dict[str, Any] = Field(default_factory=dict)


class VerifyReport(BaseModel):
    seed: int
    suites: List[SuiteResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(suite.passed for suite in self.suites)


__all__ = [
    'SolveStatus',
    'OuterRecord',
    'SolveReport',
    'PenaltyState',
    'ComparisonRow',
    'SuiteResult',
    'VerifyReport',
]
