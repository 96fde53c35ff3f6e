"""
Shared graphs and hypothesis strategies for the test suite
"""
import numpy as np
from hypothesis import strategies as st
from hypothesis.strategies import composite
from networkx.utils import UnionFind

from src.models.graph import Graph


def path_graph(M, weight=1.0):
    return Graph(M, tuple((i, i + 1, weight) for i in range(M - 1)))


def triangle(w12=1.0, w13=1.0, w23=1.0):
    return Graph(3, ((0, 1, w12), (0, 2, w13), (1, 2, w23)))


def random_connected_graph(seed, M, extra_edge_prob=0.3, low=0.5, high=2.0):
    """Random spanning tree plus random extra edges, uniform weights in [low, high]"""
    rng = np.random.default_rng(seed)
    order = rng.permutation(M)
    pairs = set()
    for k in range(1, M):
        parent = order[rng.integers(0, k)]
        child = order[k]
        pairs.add((min(parent, child), max(parent, child)))
    for i in range(M):
        for j in range(i + 1, M):
            if (i, j) not in pairs and rng.random() < extra_edge_prob:
                pairs.add((i, j))
    pairs = sorted(pairs)
    weights = rng.uniform(low, high, size=len(pairs))
    return Graph(M, tuple((i, j, w) for (i, j), w in zip(pairs, weights)))


def random_spanning_tree(seed, g):
    """Spanning tree of g from a random edge order"""
    rng = np.random.default_rng(seed)
    forest = UnionFind(range(g.num_vertices))
    chosen = []
    for e in rng.permutation(g.num_edges):
        i, j, _ = g.edges[e]
        if forest[i] != forest[j]:
            forest.union(i, j)
            chosen.append((i, j))
    return g.subgraph_edges(chosen)


@composite
def connected_graphs(draw, min_vertices=2, max_vertices=20):
    """Connected weighted graphs with their seed, for property tests"""
    M = draw(st.integers(min_value=min_vertices, max_value=max_vertices))
    seed = draw(st.integers(min_value=0, max_value=2 ** 31 - 1))
    density = draw(st.sampled_from([0.0, 0.2, 0.5, 1.0]))
    return random_connected_graph(seed, M, extra_edge_prob=density)


@composite
def graphs_with_error(draw, min_vertices=2, max_vertices=20):
    """A connected graph and an error vector on its vertices"""
    g = draw(connected_graphs(min_vertices, max_vertices))
    seed = draw(st.integers(min_value=0, max_value=2 ** 31 - 1))
    err = np.random.default_rng(seed).normal(size=g.num_vertices)
    return g, err


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path
