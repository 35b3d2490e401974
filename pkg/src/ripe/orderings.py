"""Causal orderings of an influence graph.

A causal ordering is the descending post-visit order of some depth-first
traversal.  Strongly connected components are handled separately: small ones
are enumerated exhaustively by backtracking over every start node and every
neighbour-exploration order, large ones are sampled by running DFS under
random node priorities (MC-DFS).  Per-component orderings are concatenated
along one canonical topological order of the condensation.
"""

from __future__ import annotations

import itertools
import math
import random
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import (
    EmptyComponentSet,
    LengthMismatch,
    NotStronglyConnected,
    ValueOutOfRange,
)
from .graph import (
    Condensation,
    DirectedGraph,
    dfs_traverse,
    scc_decompose,
    topological_sort,
)

EXHAUSTIVE = "exhaustive"
MC_DFS = "mc_dfs"


@dataclass(frozen=True)
class CausalOrdering:
    sequence: tuple[int, ...]
    source: str = EXHAUSTIVE
    tag: int = 0

    def __len__(self):
        return len(self.sequence)

    def __iter__(self):
        return iter(self.sequence)


@dataclass
class OrderingUniverse:
    orderings: list[CausalOrdering]
    exhaustive: bool
    component_counts: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.orderings)

    def sequences(self) -> list[tuple[int, ...]]:
        return [o.sequence for o in self.orderings]


class _CapReached(Exception):
    pass


def enumerate_scc_orderings(
    component: DirectedGraph, cap: int = 100_000
) -> tuple[list[tuple[int, ...]], bool]:
    """All DFS-realisable orderings of one strongly connected component.

    Returns ``(orderings, cap_reached)``.  Orderings use the component's own
    node indices and are sorted lexicographically.  If more than ``cap``
    distinct orderings exist, the first ``cap`` found are returned (sorted)
    and ``cap_reached`` is true.
    """
    n = component.node_count
    if n == 0:
        raise EmptyComponentSet("empty component")
    if n == 1:
        return [(0,)], False
    cond = scc_decompose(component)
    if len(cond.components) != 1:
        raise NotStronglyConnected(
            f"component splits into {len(cond.components)} strong components"
        )
    adj = component.adjacency

    # The finishing sequence from a state depends only on (stack, visited),
    # so suffix sets are memoised on that pair.
    @lru_cache(maxsize=None)
    def suffixes(stack: tuple[int, ...], visited: int) -> frozenset:
        if not stack:
            return frozenset([()])
        v = stack[-1]
        nxt = [u for u in adj[v] if not (visited >> u) & 1]
        out: set[tuple[int, ...]] = set()
        if not nxt:
            for s in suffixes(stack[:-1], visited):
                out.add((v,) + s)
        else:
            for u in nxt:
                out.update(suffixes(stack + (u,), visited | (1 << u)))
        if len(out) > cap:
            raise _CapReached
        return frozenset(out)

    result: set[tuple[int, ...]] = set()
    try:
        for root in range(n):
            result.update(suffixes((root,), 1 << root))
            if len(result) > cap:
                raise _CapReached
        capped = False
    except _CapReached:
        suffixes.cache_clear()
        result = _enumerate_until(adj, n, cap)
        capped = True
    suffixes.cache_clear()
    orderings = sorted(tuple(reversed(s)) for s in result)
    return orderings[:cap], capped


def _enumerate_until(adj, n, cap) -> set[tuple[int, ...]]:
    # Plain backtracking without memoisation; stops after cap distinct hits.
    found: set[tuple[int, ...]] = set()
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * n + 100))

    def walk(stack, visited, finished):
        if len(found) >= cap:
            return
        if not stack:
            found.add(tuple(finished))
            return
        v = stack[-1]
        nxt = [u for u in adj[v] if not (visited >> u) & 1]
        if not nxt:
            finished.append(v)
            stack.pop()
            walk(stack, visited, finished)
            stack.append(v)
            finished.pop()
            return
        for u in nxt:
            stack.append(u)
            walk(stack, visited | (1 << u), finished)
            stack.pop()

    try:
        for root in range(n):
            walk([root], 1 << root, [])
    finally:
        sys.setrecursionlimit(limit)
    return found


def _component_plan(graph: DirectedGraph, condensation: Condensation | None = None):
    cond = condensation or scc_decompose(graph)
    order = topological_sort(cond.super_dag)
    subgraphs = []
    for c in order:
        nodes = cond.components[c]
        if len(nodes) == 1:
            subgraphs.append((None, list(nodes)))
        else:
            subgraphs.append(graph.subgraph(nodes))
    return cond, order, subgraphs


def mc_dfs_sample(
    graph: DirectedGraph,
    m: int,
    seed: int = 0,
    scope: str = "component",
) -> list[CausalOrdering]:
    """Sample causal orderings by DFS under ``m`` random node priorities.

    Draw ``t`` uses its own generator seeded with ``(seed, t)``, so the
    result does not depend on how draws are scheduled.  Duplicates are
    removed keeping the first occurrence.

    With ``scope="component"`` (default) each draw runs DFS inside every
    strongly connected component under the drawn priority and concatenates
    the pieces along the canonical condensation order, so every sample
    belongs to the exhaustive universe.  ``scope="graph"`` runs a single
    whole-graph DFS per draw; its orderings respect every inter-component
    edge but components may interleave.
    """
    if m < 1:
        raise ValueOutOfRange("m must be >= 1")
    p = graph.node_count
    seen: dict[tuple[int, ...], CausalOrdering] = {}
    if scope == "graph":
        for t in range(m):
            perm = np.random.default_rng([seed, t]).permutation(p)
            seq = dfs_traverse(graph, perm.tolist()).ordering
            if seq not in seen:
                seen[seq] = CausalOrdering(seq, MC_DFS, t)
        return list(seen.values())
    if scope != "component":
        raise ValueError(f"unknown scope {scope!r}")

    _, _, plan = _component_plan(graph)
    for t in range(m):
        rank = np.random.default_rng([seed, t]).permutation(p)
        seq: list[int] = []
        for sub, nodes in plan:
            if sub is None:
                seq.extend(nodes)
                continue
            local_priority = sorted(range(len(nodes)), key=lambda i: rank[nodes[i]])
            local = dfs_traverse(sub, local_priority).ordering
            seq.extend(nodes[i] for i in local)
        key = tuple(seq)
        if key not in seen:
            seen[key] = CausalOrdering(key, MC_DFS, t)
    return list(seen.values())


def compose_universe(
    condensation: Condensation,
    per_scc: Sequence[Sequence[Sequence[int]]],
    cap: int | None = None,
    seed: int = 0,
) -> OrderingUniverse:
    """Concatenate per-component ordering sets along the canonical condensation order.

    ``per_scc[c]`` holds the orderings (global node indices) of component
    ``c``.  When the Cartesian product has more than ``cap`` elements a
    seeded uniform sample of ``cap`` distinct combinations is returned and
    the universe is flagged non-exhaustive.
    """
    if len(per_scc) != len(condensation.components):
        raise LengthMismatch("need one ordering set per component")
    for c, s in enumerate(per_scc):
        if len(s) == 0:
            raise EmptyComponentSet(f"component {c} has no orderings")
    order = topological_sort(condensation.super_dag)
    sets = [[tuple(o) for o in per_scc[c]] for c in order]
    counts = [len(s) for s in sets]
    total = math.prod(counts)
    if cap is None or total <= cap:
        combos = itertools.product(*sets)
        orderings = [
            CausalOrdering(tuple(itertools.chain.from_iterable(parts)), EXHAUSTIVE, i)
            for i, parts in enumerate(combos)
        ]
        return OrderingUniverse(orderings, True, [len(per_scc[c]) for c in range(len(per_scc))])

    picks = sorted(random.Random(seed).sample(range(total), cap))
    orderings = []
    for idx in picks:
        parts = []
        rem = idx
        for s in reversed(sets):
            rem, r = divmod(rem, len(s))
            parts.append(s[r])
        parts.reverse()
        orderings.append(
            CausalOrdering(tuple(itertools.chain.from_iterable(parts)), EXHAUSTIVE, idx)
        )
    return OrderingUniverse(orderings, False, [len(per_scc[c]) for c in range(len(per_scc))])


def exhaustive_universe(
    graph: DirectedGraph,
    cap: int | None = None,
    seed: int = 0,
    component_cap: int = 100_000,
) -> OrderingUniverse:
    cond = scc_decompose(graph)
    per_scc = []
    for nodes in cond.components:
        if len(nodes) == 1:
            per_scc.append([tuple(nodes)])
            continue
        sub, mapping = graph.subgraph(nodes)
        local, _ = enumerate_scc_orderings(sub, component_cap)
        per_scc.append([tuple(mapping[i] for i in o) for o in local])
    return compose_universe(cond, per_scc, cap, seed)


def universe_size(graph: DirectedGraph, exhaustive_max: int = 10, component_cap: int = 100_000) -> int | None:
    """Size of the exhaustive universe, or None if a component is too large to enumerate."""
    cond = scc_decompose(graph)
    total = 1
    for nodes in cond.components:
        if len(nodes) == 1:
            continue
        if len(nodes) > exhaustive_max:
            return None
        sub, _ = graph.subgraph(nodes)
        local, capped = enumerate_scc_orderings(sub, component_cap)
        if capped:
            return None
        total *= len(local)
    return total


def is_consistent(ordering: Sequence[int] | CausalOrdering, graph: DirectedGraph) -> bool:
    """True iff ``ordering`` respects every edge between distinct components."""
    seq = ordering.sequence if isinstance(ordering, CausalOrdering) else tuple(ordering)
    if len(seq) != graph.node_count or sorted(seq) != list(range(graph.node_count)):
        raise LengthMismatch("ordering must be a permutation of the graph's nodes")
    pos = np.empty(graph.node_count, dtype=np.int64)
    pos[list(seq)] = np.arange(graph.node_count)
    comp = scc_decompose(graph).component_of
    for u, nbrs in enumerate(graph.adjacency):
        for v in nbrs:
            if comp[u] != comp[v] and pos[u] > pos[v]:
                return False
    return True


def generate_orderings(
    graph: DirectedGraph,
    m: int = 1000,
    seed: int = 0,
    strategy: str = "auto",
    exhaustive_max: int = 10,
    scope: str = "component",
) -> OrderingUniverse:
    """Orderings for the pipeline.

    ``auto`` enumerates exhaustively when every strong component has at most
    ``exhaustive_max`` nodes (sampling ``m`` combinations if the product is
    larger) and otherwise falls back to ``m`` MC-DFS draws.
    """
    if strategy not in ("auto", EXHAUSTIVE, MC_DFS):
        raise ValueError(f"unknown ordering strategy {strategy!r}")
    cond = scc_decompose(graph)
    small = max(cond.sizes, default=0) <= exhaustive_max
    if strategy == EXHAUSTIVE or (strategy == "auto" and small):
        return exhaustive_universe(graph, cap=m, seed=seed)
    samples = mc_dfs_sample(graph, m, seed, scope=scope)
    return OrderingUniverse(samples, False, [len(c) for c in cond.components])
