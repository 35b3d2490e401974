import itertools

import numpy as np
import pytest

from ripe.graph import DirectedGraph

# Seven-node graph whose condensation is {1} -> {5,6} -> {2,3,4} -> {7}.
SEVEN_NODE_EDGES = [(1, 5), (5, 6), (6, 5), (6, 2), (2, 3), (3, 4), (4, 2), (4, 7)]
SEVEN_NODE_UNIVERSE = {
    (1, 5, 6, 2, 3, 4, 7),
    (1, 5, 6, 4, 2, 3, 7),
    (1, 5, 6, 3, 4, 2, 7),
    (1, 6, 5, 2, 3, 4, 7),
    (1, 6, 5, 4, 2, 3, 7),
    (1, 6, 5, 3, 4, 2, 7),
}


def one_based_graph(n, edges):
    """Graph on labels 1..n given 1-based edges (index = label - 1)."""
    return DirectedGraph.from_edges(n, [(a - 1, b - 1) for a, b in edges], [str(i) for i in range(1, n + 1)])


def to_labels(seq):
    return tuple(v + 1 for v in seq)


@pytest.fixture
def seven_node():
    return one_based_graph(7, SEVEN_NODE_EDGES)


def random_digraph(rng, p, density):
    m = rng.random((p, p)) < density
    np.fill_diagonal(m, False)
    return DirectedGraph.from_matrix(m)


def reachability(graph):
    """Boolean closure by repeated BFS; the oracle for SCC and influence tests."""
    p = graph.node_count
    reach = np.zeros((p, p), dtype=bool)
    for s in range(p):
        frontier = [s]
        seen = {s}
        while frontier:
            nxt = []
            for v in frontier:
                for u in graph.adjacency[v]:
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            frontier = nxt
        for v in seen:
            if v != s:
                reach[s, v] = True
    return reach


def brute_force_dfs_orderings(graph):
    """All descending-post orderings over every root and every neighbour order.

    Recursive DFS is run for every start node and every combination of
    per-node neighbour permutations.  Only the first root matters for a
    strongly connected graph, which is what this oracle is used on.
    """
    p = graph.node_count
    per_node = [list(itertools.permutations(a)) for a in graph.adjacency]
    out = set()
    for first in range(p):
        roots = [first] + [v for v in range(p) if v != first]
        for choice in itertools.product(*per_node):
            visited = [False] * p
            finished = []

            def visit(v):
                visited[v] = True
                for u in choice[v]:
                    if not visited[u]:
                        visit(u)
                finished.append(v)

            for r in roots:
                if not visited[r]:
                    visit(r)
            out.add(tuple(reversed(finished)))
    return out
