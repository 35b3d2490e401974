"""Directed graphs, depth-first search and strongly connected components.

Only the pieces the pipeline needs live here: a compact adjacency-list graph,
an iterative DFS recording pre/post visit times, Tarjan's SCC algorithm with
condensation, a canonical topological sort and component-size summaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CycleDetected, LengthMismatch

__all__ = [
    "DirectedGraph",
    "DfsResult",
    "Condensation",
    "dfs_traverse",
    "scc_decompose",
    "topological_sort",
    "component_size_summary",
    "is_acyclic",
]


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable directed graph on nodes ``0..node_count-1``.

    Adjacency lists keep insertion order so that traversals are reproducible.
    Self-loops and repeated edges are dropped at construction; the number of
    dropped self-loops is kept in ``dropped_self_loops``.
    """

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    node_labels: tuple[str, ...] = ()
    dropped_self_loops: int = 0

    def __post_init__(self):
        if not self.node_labels:
            object.__setattr__(
                self, "node_labels", tuple(str(i) for i in range(self.node_count))
            )
        if len(self.node_labels) != self.node_count:
            raise LengthMismatch("node_labels length does not match node_count")
        if len(self.adjacency) != self.node_count:
            raise LengthMismatch("adjacency length does not match node_count")

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[str] | None = None,
    ) -> "DirectedGraph":
        adj: list[list[int]] = [[] for _ in range(node_count)]
        seen: list[set[int]] = [set() for _ in range(node_count)]
        loops = 0
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ValueError(f"edge ({u}, {v}) outside [0, {node_count})")
            if u == v:
                loops += 1
                continue
            if v not in seen[u]:
                seen[u].add(v)
                adj[u].append(v)
        return cls(
            node_count,
            tuple(tuple(a) for a in adj),
            tuple(labels) if labels is not None else (),
            loops,
        )

    @classmethod
    def from_matrix(cls, matrix, labels: Sequence[str] | None = None) -> "DirectedGraph":
        """Graph with an edge ``i -> j`` for every nonzero ``matrix[i, j]``."""
        m = np.asarray(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise LengthMismatch("adjacency matrix must be square")
        rows, cols = np.nonzero(m)
        return cls.from_edges(m.shape[0], zip(rows.tolist(), cols.tolist()), labels)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs]

    def to_matrix(self, dtype=bool) -> np.ndarray:
        m = np.zeros((self.node_count, self.node_count), dtype=dtype)
        for u, nbrs in enumerate(self.adjacency):
            if nbrs:
                m[u, list(nbrs)] = 1
        return m

    def subgraph(self, nodes: Sequence[int]) -> tuple["DirectedGraph", list[int]]:
        """Induced subgraph on ``nodes``; returns it with the local->global index map."""
        nodes = list(nodes)
        local = {v: i for i, v in enumerate(nodes)}
        edges = [
            (local[u], local[v])
            for u in nodes
            for v in self.adjacency[u]
            if v in local
        ]
        labels = [self.node_labels[v] for v in nodes]
        return DirectedGraph.from_edges(len(nodes), edges, labels), nodes


@dataclass(frozen=True)
class DfsResult:
    pre: np.ndarray
    post: np.ndarray
    ordering: tuple[int, ...]


@dataclass(frozen=True)
class Condensation:
    """SCC partition and the acyclic graph of super-nodes.

    Components are indexed in a topological order of ``super_dag`` and each
    component lists its nodes in ascending index order.
    """

    components: tuple[tuple[int, ...], ...]
    super_dag: DirectedGraph
    component_of: np.ndarray = field(repr=False)

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.components]


def dfs_traverse(
    graph: DirectedGraph,
    node_priority: Sequence[int] | None = None,
    sort_neighbors: bool = True,
) -> DfsResult:
    """Depth-first search recording pre- and post-visit clock values.

    ``node_priority`` fixes the order in which undiscovered nodes start new
    trees and, when ``sort_neighbors`` is true, the order in which each
    node's out-neighbours are explored.  With ``sort_neighbors=False`` the
    adjacency (insertion) order is used instead.  The returned ``ordering``
    lists nodes by descending post-visit time.

    The traversal is iterative but reproduces the recursive clock exactly:
    the clock starts at 1 and ticks once on discovery and once on departure.
    """
    p = graph.node_count
    if node_priority is None:
        priority = list(range(p))
    else:
        priority = [int(v) for v in node_priority]
        if sorted(priority) != list(range(p)):
            raise LengthMismatch("node_priority must be a permutation of the nodes")
    adjacency = graph.adjacency
    if sort_neighbors and node_priority is not None:
        rank = [0] * p
        for r, v in enumerate(priority):
            rank[v] = r
        adjacency = [sorted(nbrs, key=rank.__getitem__) for nbrs in adjacency]

    pre = [0] * p
    post = [0] * p
    visited = [False] * p
    finished: list[int] = []
    clock = 1
    for root in priority:
        if visited[root]:
            continue
        visited[root] = True
        pre[root] = clock
        clock += 1
        stack = [(root, iter(adjacency[root]))]
        while stack:
            v, it = stack[-1]
            for u in it:
                if not visited[u]:
                    visited[u] = True
                    pre[u] = clock
                    clock += 1
                    stack.append((u, iter(adjacency[u])))
                    break
            else:
                stack.pop()
                post[v] = clock
                clock += 1
                finished.append(v)
    finished.reverse()
    return DfsResult(np.asarray(pre), np.asarray(post), tuple(finished))


def _tarjan(graph: DirectedGraph) -> list[list[int]]:
    # Iterative Tarjan; components come out in reverse topological order.
    p = graph.node_count
    index = [-1] * p
    low = [0] * p
    on_stack = [False] * p
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(p):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            nbrs = graph.adjacency[v]
            recursed = False
            while i < len(nbrs):
                u = nbrs[i]
                i += 1
                if index[u] == -1:
                    work.append((v, i))
                    work.append((u, 0))
                    recursed = True
                    break
                if on_stack[u]:
                    low[v] = min(low[v], index[u])
            if recursed:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return components


def scc_decompose(graph: DirectedGraph) -> Condensation:
    comps = _tarjan(graph)
    comps.reverse()
    component_of = np.empty(graph.node_count, dtype=np.int64)
    for c, nodes in enumerate(comps):
        component_of[nodes] = c
    super_edges = set()
    for u, nbrs in enumerate(graph.adjacency):
        cu = component_of[u]
        for v in nbrs:
            cv = component_of[v]
            if cu != cv:
                super_edges.add((int(cu), int(cv)))
    labels = [",".join(graph.node_labels[v] for v in nodes) for nodes in comps]
    super_dag = DirectedGraph.from_edges(len(comps), sorted(super_edges), labels)
    return Condensation(tuple(tuple(c) for c in comps), super_dag, component_of)


def is_acyclic(graph: DirectedGraph) -> bool:
    return all(len(c) == 1 for c in _tarjan(graph))


def topological_sort(dag: DirectedGraph) -> tuple[int, ...]:
    """Canonical topological order: reverse postorder of the identity-priority DFS."""
    if not is_acyclic(dag):
        raise CycleDetected("graph contains a directed cycle")
    return dfs_traverse(dag).ordering


def component_size_summary(graph: DirectedGraph) -> tuple[int, int, int]:
    """Return ``(largest SCC size, largest weakly connected size, edge count)``."""
    if graph.node_count == 0:
        return 0, 0, 0
    largest_scc = max(len(c) for c in _tarjan(graph))
    edges = graph.edges()
    rows = np.fromiter((u for u, _ in edges), dtype=np.int64, count=len(edges))
    cols = np.fromiter((v for _, v in edges), dtype=np.int64, count=len(edges))
    m = csr_matrix(
        (np.ones(len(edges)), (rows, cols)),
        shape=(graph.node_count, graph.node_count),
    )
    _, labels = connected_components(m, directed=True, connection="weak")
    largest_wcc = int(np.bincount(labels).max())
    return largest_scc, largest_wcc, len(edges)
