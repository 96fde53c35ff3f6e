"""
Cost and risk types for the Laplacian-weighted error measure
"""
from dataclasses import dataclass

import numpy as np

from ..utils.linalg import frozen


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Matrix cost of one estimate together with the error that produced it"""

    matrix: np.ndarray
    error: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen(self.matrix))
        object.__setattr__(self, 'error', frozen(self.error))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))


@dataclass(frozen=True, eq=False)
class RiskEstimate:
    """Monte Carlo average of cost matrices"""

    matrix: np.ndarray
    trials: int
    trace_mean: float
    trace_se: float

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen(self.matrix))

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def to_dict(self):
        return {
            'trials': self.trials,
            'trace': self.trace,
            'trace_mean': self.trace_mean,
            'trace_se': self.trace_se,
        }


@dataclass(frozen=True, eq=False)
class UnbiasednessCheck:
    """Outcome of the graph-unbiasedness test on a Monte Carlo mean error"""

    passed: bool
    statistic: np.ndarray
    standard_error: np.ndarray
    sigmas: float

    @property
    def max_ratio(self) -> float:
        """Largest |statistic| / standard error over the components"""
        if self.statistic.size == 0:
            return 0.0
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.abs(self.statistic) / self.standard_error
        ratio = np.where(np.abs(self.statistic) == 0, 0.0, ratio)
        return float(np.max(ratio))

    def to_dict(self):
        return {
            'passed': self.passed,
            'max_ratio': self.max_ratio,
            'sigmas': self.sigmas,
            'components': int(self.statistic.size),
        }
