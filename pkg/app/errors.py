from typing import Optional

import numpy as np


class IrsSymbioticError(Exception):
    """Base exception for the toolkit"""
    pass


# Scenario / artifact errors

class ScenarioError(IrsSymbioticError):
    """Custom exception for scenario and artifact operations"""
    pass


class ParseError(ScenarioError):
    """Scenario file is not valid JSON or has the wrong shape"""
    pass


class ValidationError(ScenarioError):
    """A scenario field violates its invariant"""

    def __init__(self, field: str, message: Optional[str] = None):
        self.field = field
        super().__init__(message or f"invalid value for '{field}'")


class IoError(ScenarioError):
    """Reading or writing an artifact failed"""
    pass


# Channel / physical layer errors

class ChannelError(IrsSymbioticError):
    """Custom exception for channel and physical-layer operations"""
    pass


class DimensionMismatch(ChannelError):
    pass


class InvalidInput(ChannelError):
    pass


class DegenerateChannel(ChannelError):
    """The reflected link adds no detectable energy (sigma1^2 <= sigma0^2)"""
    pass


# Solver errors

class SolverError(IrsSymbioticError):
    """Custom exception for the convex kernel"""
    pass


class InfeasibleLP(SolverError):
    pass


class UnboundedLP(SolverError):
    pass


class QPInfeasible(SolverError):
    pass


class InfeasibleStart(SolverError):
    """Barrier solver was handed a point that is not strictly feasible"""
    pass


class LineSearchStall(SolverError):
    """Backtracking could not make progress; carries the best iterate found"""

    def __init__(self, message: str, best_x: Optional[np.ndarray] = None):
        self.best_x = best_x
        super().__init__(message)


# Algorithm-level errors

class OptimizationError(IrsSymbioticError):
    """Custom exception for the design algorithms"""
    pass


class Infeasible(OptimizationError):
    pass


class InfeasibleSlot(Infeasible):
    """No schedule meets the primary rate requirement in one slot"""

    def __init__(self, slot: int, message: Optional[str] = None):
        self.slot = slot
        super().__init__(message or f"slot {slot}: no IRS association meets the rate threshold")


class NonConverged(OptimizationError):
    pass


__all__ = [
    'IrsSymbioticError',
    'ScenarioError',
    'ParseError',
    'ValidationError',
    'IoError',
    'ChannelError',
    'DimensionMismatch',
    'InvalidInput',
    'DegenerateChannel',
    'SolverError',
    'InfeasibleLP',
    'UnboundedLP',
    'QPInfeasible',
    'InfeasibleStart',
    'LineSearchStall',
    'OptimizationError',
    'Infeasible',
    'InfeasibleSlot',
    'NonConverged',
]
