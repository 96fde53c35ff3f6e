"""
Sensor placement service

Spanning-tree selection of relative-measurement edges and node-subset
selection for bandlimited recovery, all driven by the graph CRB.
"""
import logging
import time
from typing import Callable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

from ..config import Config
from ..models.fisher import FisherInfo
from ..models.graph import Graph, Spectrum
from ..models.results import EdgePolicy, EdgePolicyResult, NodePolicy, NodePolicyResult
from ..utils.errors import (
    AllCandidatesSingular, DisconnectedGraph, InfeasibleBudget, InvalidTree,
    NoFeasibleSubset, SingularInformation,
)
from ..utils.linalg import condition_number
from .bounds_service import BoundsService
from .spectral_service import SpectralService

logger = logging.getLogger(__name__)

Objective = Callable[[List[int]], float]


def _kruskal(g: Graph, keys: np.ndarray, maximize: bool) -> List[Tuple[int, int]]:
    """Spanning tree by Kruskal; equal keys resolve in lexicographic edge order"""
    sign = -1.0 if maximize else 1.0
    order = sorted(range(g.num_edges), key=lambda e: (sign * keys[e], g.edges[e][0], g.edges[e][1]))
    forest = UnionFind(range(g.num_vertices))
    chosen = []
    for e in order:
        i, j, _ = g.edges[e]
        if forest[i] != forest[j]:
            forest.union(i, j)
            chosen.append((i, j))
            if len(chosen) == g.num_vertices - 1:
                break
    return chosen


class SamplingService:
    """CRB-driven measurement placement policies"""

    # --------------------------------------------------- spanning trees

    @staticmethod
    def spanning_tree_policy(g: Graph, policy: EdgePolicy, seed: Optional[int] = None,
                             sigma2: float = 1.0, spec: Optional[Spectrum] = None,
                             L: Optional[np.ndarray] = None) -> EdgePolicyResult:
        """
        Choose M-1 measurement edges forming a spanning tree of g

        MaxST / MinST use squared physical weights as Kruskal keys;
        RandST uses i.i.d. uniform keys drawn from seed. The reported CRB
        trace is the relative-measurement bound with the tree's physical
        weights.

        Raises:
            DisconnectedGraph: g has no spanning tree
        """
        if not g.is_connected():
            raise DisconnectedGraph("connectivity check failed: physical graph is disconnected")
        started = time.perf_counter()
        if policy is EdgePolicy.RAND_ST:
            keys = np.random.default_rng(seed).random(g.num_edges)
            pairs = _kruskal(g, keys, maximize=False)
        else:
            keys = g.weights ** 2
            pairs = _kruskal(g, keys, maximize=policy is EdgePolicy.MAX_ST)
        tree = g.subgraph_edges(pairs)
        seconds = time.perf_counter() - started

        if L is None:
            L = SpectralService.build_laplacian(g)
        if spec is None:
            spec = SpectralService.decompose(L)
        bound = BoundsService.relative_crb(spec, L, tree, sigma2, policy=policy.value)
        logger.info(f"{policy.value}: tree with {tree.num_edges} edges, CRB trace {bound.trace:.6g}")
        return EdgePolicyResult(tree, policy, bound.trace, seconds)

    @staticmethod
    def tree_stretch(g: Graph, tree: Union[Graph, EdgePolicyResult]) -> float:
        """
        Total stretch of g with respect to a spanning tree (a Graph or a
        spanning-tree policy result)

        Sum over edges (m, k) of g of W_mk times the resistance
        (sum of 1 / tree weight) of the tree path from m to k.

        Raises:
            InvalidTree: tree is not a spanning tree on g's vertex set
        """
        if isinstance(tree, EdgePolicyResult):
            tree = tree.tree
        if tree.num_vertices != g.num_vertices:
            raise InvalidTree(f"tree has {tree.num_vertices} vertices, graph has {g.num_vertices}")
        if tree.num_edges != g.num_vertices - 1 or not tree.is_connected():
            raise InvalidTree("edge set is not a spanning tree")

        t = nx.Graph()
        t.add_nodes_from(range(tree.num_vertices))
        for i, j, w in tree.edges:
            t.add_edge(i, j, resistance=1.0 / w)

        total = 0.0
        resistance_from = {}
        for m, k, w in g.edges:
            if m not in resistance_from:
                resistance_from[m] = nx.single_source_dijkstra_path_length(t, m, weight='resistance')
            total += w * resistance_from[m][k]
        return total

    # ------------------------------------------------------ node subsets

    @staticmethod
    def _removal_loop(M: int, R: int, D: int, objective: Objective,
                      label: str) -> Tuple[Tuple[int, ...], Tuple[Tuple[int, float], ...]]:
        """Remove one node at a time, each time the one whose removal leaves the smallest objective"""
        if D < R:
            raise InfeasibleBudget(f"budget D={D} is smaller than the band R={R}")
        if D > M:
            raise InfeasibleBudget(f"budget D={D} exceeds the {M} available nodes")

        current = list(range(M))
        history = []
        while len(current) > D:
            best_value, best_node = np.inf, None
            for node in current:
                value = objective([n for n in current if n != node])
                if value < best_value:
                    best_value, best_node = value, node
            if best_node is None:
                raise AllCandidatesSingular(
                    f"{label}: every removal from a set of {len(current)} nodes is singular"
                )
            current.remove(best_node)
            history.append((best_node, float(best_value)))
            logger.debug(f"{label}: removed node {best_node}, objective {best_value:.6g}")
        return tuple(current), tuple(history)

    @staticmethod
    def _finite(fn: Callable[[], float]) -> float:
        """Objective value, or +inf where the information matrix is singular"""
        try:
            value = fn()
        except SingularInformation:
            return np.inf
        return value if np.isfinite(value) else np.inf

    @classmethod
    def _node_policy(cls, spec: Spectrum, R: int, D: int, J: FisherInfo,
                     policy: NodePolicy, objective: Objective) -> NodePolicyResult:
        started = time.perf_counter()
        subset, history = cls._removal_loop(spec.size, R, D, objective, policy.value)
        seconds = time.perf_counter() - started
        value = objective(list(subset))
        crb = cls._finite(lambda: BoundsService.bandlimited_crb_trace(spec, R, subset, J.restrict(subset)))
        if not np.isfinite(crb):
            raise AllCandidatesSingular(f"{policy.value}: selected subset has singular information")
        logger.info(f"{policy.value}: kept {len(subset)} nodes, CRB trace {crb:.6g}")
        return NodePolicyResult(subset, policy, float(value), float(crb), history, seconds)

    @classmethod
    def greedy_node_selection(cls, spec: Spectrum, R: int, D: int, J: FisherInfo) -> NodePolicyResult:
        """
        Greedy removal minimizing the bandlimited graph CRB trace

        Starting from all nodes, repeatedly remove the node whose removal
        leaves the smallest CRB trace until D nodes remain. Ties go to the
        lowest node index; singular candidates are skipped.

        Raises:
            InfeasibleBudget: D < R
            AllCandidatesSingular: no removal keeps the information nonsingular
        """
        def objective(nodes):
            return cls._finite(lambda: BoundsService.bandlimited_crb_trace(spec, R, nodes, J.restrict(nodes)))
        return cls._node_policy(spec, R, D, J, NodePolicy.GREEDY, objective)

    @classmethod
    def adesign_selection(cls, spec: Spectrum, R: int, D: int, J: FisherInfo) -> NodePolicyResult:
        """Same removal loop minimizing Tr((V_SR^T J_S V_SR)^{-1})"""
        def objective(nodes):
            return cls._finite(lambda: BoundsService.a_design_objective(spec, R, nodes, J.restrict(nodes)))
        return cls._node_policy(spec, R, D, J, NodePolicy.A_DESIGN, objective)

    @classmethod
    def edesign_selection(cls, spec: Spectrum, R: int, D: int, J: FisherInfo) -> NodePolicyResult:
        """Same removal loop maximizing the smallest singular value of V_SR"""
        floor = 1.0 / np.sqrt(Config.SINGULAR_COND)

        def objective(nodes):
            smallest = BoundsService.e_design_objective(spec, R, nodes)
            return -smallest if smallest > floor else np.inf
        return cls._node_policy(spec, R, D, J, NodePolicy.E_DESIGN, objective)

    @classmethod
    def random_selection(cls, spec: Spectrum, R: int, D: int, J: FisherInfo,
                         seed: Optional[int] = None) -> NodePolicyResult:
        """
        Uniformly random D-subset with a bounded-condition resampling rule

        Raises:
            InfeasibleBudget: D < R or D > M
            NoFeasibleSubset: no draw met the condition bound
        """
        M = spec.size
        if D < R:
            raise InfeasibleBudget(f"budget D={D} is smaller than the band R={R}")
        if D > M:
            raise InfeasibleBudget(f"budget D={D} exceeds the {M} available nodes")
        started = time.perf_counter()
        rng = np.random.default_rng(seed)
        for attempt in range(1, Config.MAX_ATTEMPTS + 1):
            subset = tuple(int(n) for n in np.sort(rng.choice(M, size=D, replace=False)))
            V_SR = spec.eigenvectors[np.ix_(subset, np.arange(R))]
            if condition_number(V_SR.T @ V_SR) <= Config.RANDOM_SUBSET_COND:
                break
        else:
            raise NoFeasibleSubset(f"no random {D}-subset met the condition bound in {Config.MAX_ATTEMPTS} draws")
        if attempt > 1:
            logger.warning(f"random: accepted subset after {attempt} draws")
        seconds = time.perf_counter() - started
        crb = BoundsService.bandlimited_crb_trace(spec, R, subset, J.restrict(subset))
        return NodePolicyResult(subset, NodePolicy.RANDOM, crb, crb, (), seconds)

    @classmethod
    def select_nodes(cls, policy: NodePolicy, spec: Spectrum, R: int, D: int, J: FisherInfo,
                     seed: Optional[int] = None) -> NodePolicyResult:
        if policy is NodePolicy.GREEDY:
            return cls.greedy_node_selection(spec, R, D, J)
        if policy is NodePolicy.A_DESIGN:
            return cls.adesign_selection(spec, R, D, J)
        if policy is NodePolicy.E_DESIGN:
            return cls.edesign_selection(spec, R, D, J)
        return cls.random_selection(spec, R, D, J, seed)

    @staticmethod
    def is_spanning_tree(g: Graph, tree: Graph) -> bool:
        """Whether tree is a spanning tree using only edges of g"""
        if tree.num_vertices != g.num_vertices or tree.num_edges != g.num_vertices - 1:
            return False
        physical = set(g.edge_pairs)
        return all(p in physical for p in tree.edge_pairs) and nx.is_tree(tree.to_networkx())
