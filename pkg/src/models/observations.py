"""
Observation models: relative edge measurements and masked node samples
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..utils.errors import BadCovariance, DimensionMismatch
from ..utils.linalg import frozen
from .graph import Graph


@dataclass(frozen=True, eq=False)
class RelativeObservation:
    """Noisy weighted differences h_ij = w_ij (theta_i - theta_j) + noise

    x follows the lexicographic edge order of graph (i < j).
    """

    graph: Graph
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if x.shape[0] != self.graph.num_edges:
            raise DimensionMismatch(f"{x.shape[0]} measurements for {self.graph.num_edges} edges")
        object.__setattr__(self, 'x', frozen(x))


@dataclass(frozen=True, eq=False)
class MaskedObservation:
    """Noisy samples x = theta_S + w_S on a sorted node subset S"""

    sample_set: Tuple[int, ...]
    x: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        nodes = tuple(int(n) for n in self.sample_set)
        if list(nodes) != sorted(set(nodes)):
            raise DimensionMismatch("sample set must be sorted with unique indices")
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if x.shape[0] != len(nodes):
            raise DimensionMismatch(f"{x.shape[0]} samples for {len(nodes)} nodes")
        cov = np.asarray(self.noise_cov, dtype=float)
        if cov.ndim == 1:
            cov = np.diag(cov)
        if cov.shape != (len(nodes), len(nodes)):
            raise BadCovariance(f"noise covariance has shape {cov.shape}, expected {(len(nodes), len(nodes))}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-10 * max(1.0, float(np.max(np.abs(cov), initial=0.0))):
            raise BadCovariance("noise covariance is not symmetric")
        object.__setattr__(self, 'sample_set', nodes)
        object.__setattr__(self, 'x', frozen(x))
        object.__setattr__(self, 'noise_cov', frozen(cov))

    @property
    def num_samples(self) -> int:
        return len(self.sample_set)
