import math

import numpy as np
import pytest

from conftest import (
    SEVEN_NODE_UNIVERSE,
    brute_force_dfs_orderings,
    one_based_graph,
    random_digraph,
    to_labels,
)
from ripe.errors import EmptyComponentSet, LengthMismatch, NotStronglyConnected, ValueOutOfRange
from ripe.graph import DirectedGraph, scc_decompose
from ripe.orderings import (
    compose_universe,
    enumerate_scc_orderings,
    exhaustive_universe,
    generate_orderings,
    is_consistent,
    mc_dfs_sample,
    universe_size,
)


def _labelled(orderings, mapping):
    return {tuple(mapping[i] + 1 for i in o) for o in orderings}


def test_two_cycle():
    g = one_based_graph(6, [(5, 6), (6, 5)])
    sub, mapping = g.subgraph([4, 5])
    found, capped = enumerate_scc_orderings(sub)
    assert _labelled(found, mapping) == {(5, 6), (6, 5)}
    assert not capped


def test_three_cycle_exactly_rotations():
    g = one_based_graph(4, [(2, 3), (3, 4), (4, 2)])
    sub, mapping = g.subgraph([1, 2, 3])
    found, _ = enumerate_scc_orderings(sub)
    assert _labelled(found, mapping) == {(2, 3, 4), (3, 4, 2), (4, 2, 3)}


def test_singleton_component():
    assert enumerate_scc_orderings(DirectedGraph.from_edges(1, [])) == ([(0,)], False)


def test_not_strongly_connected():
    with pytest.raises(NotStronglyConnected):
        enumerate_scc_orderings(DirectedGraph.from_edges(2, [(0, 1)]))


def test_enumeration_complete_against_brute_force():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 60:
        n = int(rng.integers(2, 7))
        g = random_digraph(rng, n, float(rng.uniform(0.3, 0.7)))
        if len(scc_decompose(g).components) != 1:
            continue
        # keep the brute force tractable
        if math.prod(math.factorial(len(a)) for a in g.adjacency) > 20_000:
            continue
        found, capped = enumerate_scc_orderings(g)
        assert not capped
        assert set(found) == brute_force_dfs_orderings(g)
        assert len(found) == len(set(found))
        checked += 1


def test_complete_digraph_gives_all_permutations():
    n = 5
    g = DirectedGraph.from_edges(n, [(a, b) for a in range(n) for b in range(n) if a != b])
    found, _ = enumerate_scc_orderings(g)
    assert len(found) == math.factorial(n)


def test_enumeration_cap():
    n = 6
    g = DirectedGraph.from_edges(n, [(a, b) for a in range(n) for b in range(n) if a != b])
    found, capped = enumerate_scc_orderings(g, cap=50)
    assert capped and len(found) == 50
    assert len(set(found)) == 50


def test_seven_node_universe(seven_node):
    uni = exhaustive_universe(seven_node)
    assert uni.exhaustive
    got = [to_labels(o) for o in uni.sequences()]
    assert len(got) == len(set(got)) == 6
    assert set(got) == SEVEN_NODE_UNIVERSE
    assert universe_size(seven_node) == 6


def test_compose_seven_node_inputs(seven_node):
    cond = scc_decompose(seven_node)
    per = {
        frozenset([0]): [(0,)],
        frozenset([4, 5]): [(4, 5), (5, 4)],
        frozenset([1, 2, 3]): [(1, 2, 3), (3, 1, 2), (2, 3, 1)],
        frozenset([6]): [(6,)],
    }
    per_scc = [per[frozenset(c)] for c in cond.components]
    uni = compose_universe(cond, per_scc)
    assert {to_labels(o) for o in uni.sequences()} == SEVEN_NODE_UNIVERSE
    assert (1, 5, 6, 2, 3, 4, 7) in {to_labels(o) for o in uni.sequences()}


def test_compose_all_singletons():
    g = one_based_graph(4, [(1, 2), (2, 3)])
    assert len(exhaustive_universe(g)) == 1


def test_compose_cap_samples_distinct():
    # 3926 = 2 * 13 * 151 combinations, capped at 1000
    cond = scc_decompose(DirectedGraph.from_edges(3, []))
    sets = [[(i,) for i in range(2)], [(10 + i,) for i in range(13)], [(100 + i,) for i in range(151)]]
    uni = compose_universe(cond, sets, cap=1000, seed=4)
    assert len(uni) == 1000 and not uni.exhaustive
    assert len(set(uni.sequences())) == 1000
    again = compose_universe(cond, sets, cap=1000, seed=4)
    assert uni.sequences() == again.sequences()
    full = compose_universe(cond, sets)
    assert len(full) == 3926 and full.exhaustive
    assert set(uni.sequences()) <= set(full.sequences())


def test_compose_empty_set_rejected():
    cond = scc_decompose(DirectedGraph.from_edges(2, []))
    with pytest.raises(EmptyComponentSet):
        compose_universe(cond, [[(0,)], []])


def test_is_consistent_examples(seven_node):
    def idx(seq):
        return [v - 1 for v in seq]

    assert is_consistent(idx((1, 5, 6, 2, 3, 4, 7)), seven_node)
    assert not is_consistent(idx((7, 1, 5, 6, 2, 3, 4)), seven_node)
    empty = DirectedGraph.from_edges(4, [])
    assert is_consistent([3, 1, 0, 2], empty)
    with pytest.raises(LengthMismatch):
        is_consistent([0, 1], seven_node)


def test_mc_dfs_seven_node_equals_universe(seven_node):
    got = {to_labels(o.sequence) for o in mc_dfs_sample(seven_node, 10_000, seed=0)}
    assert got == SEVEN_NODE_UNIVERSE


def test_mc_dfs_graph_scope_is_consistent(seven_node):
    samples = mc_dfs_sample(seven_node, 2000, seed=1, scope="graph")
    assert all(is_consistent(o.sequence, seven_node) for o in samples)
    # whole-graph DFS may interleave components, so it can leave the universe
    assert {to_labels(o.sequence) for o in samples} >= SEVEN_NODE_UNIVERSE


def test_mc_dfs_acyclic_gives_topological_orders():
    rng = np.random.default_rng(5)
    m = np.triu(rng.random((15, 15)) < 0.2, 1)
    g = DirectedGraph.from_matrix(m)
    for o in mc_dfs_sample(g, 50, seed=2):
        pos = {v: i for i, v in enumerate(o.sequence)}
        assert all(pos[u] < pos[v] for u, v in g.edges())


def test_mc_dfs_deterministic_and_m1(seven_node):
    a = mc_dfs_sample(seven_node, 1, seed=9)
    b = mc_dfs_sample(seven_node, 1, seed=9)
    assert len(a) == 1 and a == b
    with pytest.raises(ValueOutOfRange):
        mc_dfs_sample(seven_node, 0)


def test_mc_dfs_draws_independent_of_m(seven_node):
    # draw t uses its own generator, so a longer run extends a shorter one
    short = mc_dfs_sample(seven_node, 20, seed=3)
    long = mc_dfs_sample(seven_node, 200, seed=3)
    assert [o.sequence for o in long[: len(short)]] == [o.sequence for o in short]


def test_soundness_over_random_graphs():
    rng = np.random.default_rng(6)
    for _ in range(500):
        p = int(rng.integers(1, 61))
        g = random_digraph(rng, p, float(rng.uniform(0, 3.0 / p)))
        uni = generate_orderings(g, m=5, seed=int(rng.integers(1 << 30)), exhaustive_max=6)
        for o in uni.orderings:
            assert is_consistent(o.sequence, g)


def test_mc_dfs_subset_of_exhaustive():
    rng = np.random.default_rng(7)
    done = 0
    while done < 40:
        g = random_digraph(rng, int(rng.integers(3, 12)), 0.25)
        size = universe_size(g, exhaustive_max=7)
        if size is None or size > 5000:
            continue
        universe = set(exhaustive_universe(g).sequences())
        assert len(universe) == size
        sampled = {o.sequence for o in mc_dfs_sample(g, 100, seed=done)}
        assert sampled <= universe
        done += 1


def test_acyclic_graph_single_ordering():
    rng = np.random.default_rng(8)
    g = DirectedGraph.from_matrix(np.triu(rng.random((12, 12)) < 0.3, 1))
    uni = generate_orderings(g)
    assert len(uni) == 1 and uni.exhaustive


def test_generate_orderings_strategies(seven_node):
    assert len(generate_orderings(seven_node, strategy="exhaustive")) == 6
    mc = generate_orderings(seven_node, m=50, strategy="mc_dfs")
    assert not mc.exhaustive and {o.source for o in mc.orderings} == {"mc_dfs"}
    # auto falls back to sampling when a component exceeds the threshold
    auto = generate_orderings(seven_node, m=50, exhaustive_max=2)
    assert not auto.exhaustive
    with pytest.raises(ValueError):
        generate_orderings(seven_node, strategy="nope")
