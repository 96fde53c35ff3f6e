"""
Fisher information representations and bound results
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..utils.errors import DimensionMismatch, InvalidVariance
from ..utils.linalg import frozen, symmetrize
from .graph import Graph


class FisherInfo:
    """Common interface of the Fisher information forms"""

    @property
    def size(self) -> int:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        raise NotImplementedError

    def restrict(self, nodes: Sequence[int]) -> 'FisherInfo':
        """Information of the samples taken at nodes (sorted, 0-based)"""
        J = self.matrix()
        idx = np.asarray(nodes, dtype=int)
        return ExplicitMatrix(J[np.ix_(idx, idx)])

    def scaled(self, alpha: float) -> 'FisherInfo':
        return ExplicitMatrix(alpha * self.matrix())


@dataclass(frozen=True, eq=False)
class ExplicitMatrix(FisherInfo):
    """Symmetric PSD information matrix given entry by entry"""

    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise DimensionMismatch(f"information matrix must be square, got {J.shape}")
        scale = max(1.0, float(np.max(np.abs(J), initial=0.0)))
        if np.max(np.abs(J - J.T), initial=0.0) > 1e-10 * scale:
            raise DimensionMismatch("information matrix is not symmetric")
        if J.size and np.min(np.linalg.eigvalsh(symmetrize(J))) < -1e-8 * scale:
            raise DimensionMismatch("information matrix is not positive semidefinite")
        object.__setattr__(self, 'J', frozen(symmetrize(J)))

    @property
    def size(self) -> int:
        return self.J.shape[0]

    def matrix(self) -> np.ndarray:
        return np.array(self.J)


@dataclass(frozen=True, eq=False)
class DiagonalNoise(FisherInfo):
    """Independent Gaussian node noise: J = diag(1 / variances)"""

    variances: np.ndarray

    def __post_init__(self):
        var = np.asarray(self.variances, dtype=float).reshape(-1)
        if var.size == 0 or not np.all(np.isfinite(var)) or np.any(var <= 0):
            raise InvalidVariance("noise variances must be finite and positive")
        object.__setattr__(self, 'variances', frozen(var))

    @classmethod
    def iid(cls, M: int, sigma2: float) -> 'DiagonalNoise':
        return cls(np.full(M, float(sigma2)))

    @property
    def size(self) -> int:
        return self.variances.shape[0]

    def matrix(self) -> np.ndarray:
        return np.diag(1.0 / self.variances)

    def restrict(self, nodes: Sequence[int]) -> 'DiagonalNoise':
        return DiagonalNoise(self.variances[np.asarray(nodes, dtype=int)])

    def scaled(self, alpha: float) -> 'DiagonalNoise':
        return DiagonalNoise(self.variances / alpha)


@dataclass(frozen=True, eq=False)
class RelativeMeasurement(FisherInfo):
    """Information of noisy weighted differences on a measurement graph"""

    graph: Graph
    sigma2: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise InvalidVariance(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def size(self) -> int:
        return self.graph.num_vertices

    def matrix(self) -> np.ndarray:
        from ..services.bounds_service import BoundsService
        return BoundsService.relative_fim(self.graph, self.sigma2).matrix()

    def scaled(self, alpha: float) -> 'RelativeMeasurement':
        return RelativeMeasurement(self.graph, self.sigma2 / alpha)


@dataclass(frozen=True, eq=False)
class BoundResult:
    """Matrix bound on the weighted risk, its trace and provenance tags"""

    matrix: np.ndarray
    trace: float
    model: str = "general"
    policy: str = "-"

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen(self.matrix))
        object.__setattr__(self, 'trace', float(self.trace))

    @classmethod
    def from_matrix(cls, B: np.ndarray, model: str = "general", policy: str = "-") -> 'BoundResult':
        B = symmetrize(np.asarray(B, dtype=float))
        return cls(B, float(np.trace(B)), model, policy)

    def to_dict(self):
        return {
            'model': self.model,
            'policy': self.policy,
            'M': int(self.matrix.shape[0]),
            'trace': self.trace,
        }
