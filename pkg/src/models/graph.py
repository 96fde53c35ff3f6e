"""
Graph-core domain types
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from ..utils.errors import (
    DimensionMismatch, DuplicateEdge, NegativeWeight, NodeIndexOutOfRange,
    ParseError, SelfLoop, ZeroWeight,
)
from ..utils.linalg import frozen

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class Graph:
    """Simple undirected weighted graph on vertices 0..num_vertices-1

    Edges are stored once, as (i, j, weight) with i < j, in lexicographic
    order. Construction rejects self-loops, duplicates and non-positive
    weights.
    """

    num_vertices: int
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        if int(self.num_vertices) < 1:
            raise ParseError(f"num_vertices must be positive, got {self.num_vertices}")
        object.__setattr__(self, 'num_vertices', int(self.num_vertices))

        seen = set()
        normalized = []
        for raw in self.edges:
            i, j, w = int(raw[0]), int(raw[1]), float(raw[2])
            if i == j:
                raise SelfLoop(f"self-loop at vertex {i}")
            if i > j:
                i, j = j, i
            if i < 0 or j >= self.num_vertices:
                raise NodeIndexOutOfRange(f"edge ({i}, {j}) outside 0..{self.num_vertices - 1}")
            if not np.isfinite(w):
                raise ParseError(f"edge ({i}, {j}) has non-finite weight {w}")
            if w < 0:
                raise NegativeWeight(f"edge ({i}, {j}) has negative weight {w}")
            if w == 0:
                raise ZeroWeight(f"edge ({i}, {j}) has zero weight")
            if (i, j) in seen:
                raise DuplicateEdge(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            normalized.append((i, j, w))
        object.__setattr__(self, 'edges', tuple(sorted(normalized)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, j, _ in self.edges]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    def weight_of(self, i: int, j: int) -> Optional[float]:
        a, b = (i, j) if i < j else (j, i)
        for u, v, w in self.edges:
            if (u, v) == (a, b):
                return w
        return None

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.num_vertices, self.num_vertices))
        for i, j, w in self.edges:
            W[i, j] = w
            W[j, i] = w
        return W

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_vertices))
        g.add_weighted_edges_from(self.edges)
        return g

    @classmethod
    def from_networkx(cls, g: nx.Graph, weight: str = 'weight', default: float = 1.0) -> 'Graph':
        """Build from a networkx graph whose nodes are 0..n-1"""
        edges = [(u, v, d.get(weight, default)) for u, v, d in g.edges(data=True)]
        return cls(g.number_of_nodes(), tuple(edges))

    def is_connected(self) -> bool:
        if self.num_vertices == 1:
            return True
        return nx.is_connected(self.to_networkx())

    def subgraph_edges(self, pairs: Iterable[Tuple[int, int]]) -> 'Graph':
        """Same vertex set, keeping only the listed edges with their weights"""
        lookup: Dict[Tuple[int, int], float] = {(i, j): w for i, j, w in self.edges}
        kept = []
        for i, j in pairs:
            key = (i, j) if i < j else (j, i)
            if key not in lookup:
                raise NodeIndexOutOfRange(f"edge {key} is not in the graph")
            kept.append((key[0], key[1], lookup[key]))
        return Graph(self.num_vertices, tuple(kept))

    def with_edge(self, i: int, j: int, weight: float) -> 'Graph':
        return Graph(self.num_vertices, self.edges + ((i, j, weight),))

    def with_unit_weights(self) -> 'Graph':
        return Graph(self.num_vertices, tuple((i, j, 1.0) for i, j, _ in self.edges))

    def to_dict(self):
        return {
            'num_vertices': self.num_vertices,
            'edges': [[i, j, w] for i, j, w in self.edges],
        }


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of a connected graph's Laplacian

    eigenvalues ascend with the first one exactly zero; eigenvectors are
    the orthonormal columns of an MxM matrix, first column 1/sqrt(M).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = frozen(self.eigenvalues)
        vecs = frozen(self.eigenvectors)
        if lam.ndim != 1 or vecs.shape != (lam.shape[0], lam.shape[0]):
            raise DimensionMismatch(
                f"eigenvalues {lam.shape} and eigenvectors {vecs.shape} do not match"
            )
        object.__setattr__(self, 'eigenvalues', lam)
        object.__setattr__(self, 'eigenvectors', vecs)

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        # eigenvalues[0] is exactly 0, so the first entry is exactly 0 too
        return np.sqrt(np.clip(self.eigenvalues, 0.0, None))

    def low_band(self, R: int) -> np.ndarray:
        """First R eigenvector columns (V times the band selector)"""
        return self.eigenvectors[:, :R]

    def laplacian(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    """Oriented incidence matrix, one column per edge in edge_order

    Column e for edge (i, j), i < j, carries +1 in row i and -1 in row j.
    """

    matrix: np.ndarray
    edge_order: Tuple[Tuple[int, int], ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'matrix', frozen(self.matrix))
        object.__setattr__(self, 'weights', frozen(self.weights))
        object.__setattr__(self, 'edge_order', tuple(tuple(p) for p in self.edge_order))

    def weighted_laplacian(self) -> np.ndarray:
        E = self.matrix
        return (E * self.weights) @ E.T


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Linear constraints G theta = a with an orthonormal null-space basis U"""

    G: np.ndarray
    a: np.ndarray
    U: np.ndarray
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        U = np.asarray(self.U, dtype=float)
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if G.shape[0] == 0:
            G = np.zeros((0, U.shape[0]))
        if G.shape[1] != U.shape[0] or a.shape[0] != G.shape[0]:
            raise DimensionMismatch(f"G {G.shape}, a {a.shape} and U {U.shape} are inconsistent")
        if G.shape[0] and np.max(np.abs(G @ U), initial=0.0) > self.tol * max(1.0, np.max(np.abs(G))):
            raise DimensionMismatch("U does not lie in the null space of G")
        gram = U.T @ U
        if np.max(np.abs(gram - np.eye(U.shape[1])), initial=0.0) > self.tol:
            raise DimensionMismatch("U does not have orthonormal columns")
        object.__setattr__(self, 'G', frozen(G))
        object.__setattr__(self, 'a', frozen(a))
        object.__setattr__(self, 'U', frozen(U))

    @property
    def num_constraints(self) -> int:
        return self.G.shape[0]

    @property
    def size(self) -> int:
        return self.U.shape[0]

    @classmethod
    def unconstrained(cls, M: int) -> 'ConstraintSet':
        return cls(np.zeros((0, M)), np.zeros(0), np.eye(M))
