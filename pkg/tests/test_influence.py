import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ripe.errors import (
    InsufficientReplicates,
    LabelMismatch,
    MissingWildType,
    ValueOutOfRange,
    DataError,
)
from ripe.influence import (
    DEFAULT_GRID,
    ExpressionDataset,
    InfluenceMatrix,
    bh_adjust,
    build_influence_matrix,
    cutoff_scan,
    welch_t_test,
)
from ripe.synth import WeightedNetwork, simulate_perturbation_screen

mpmath.mp.dps = 40


def t_pvalue_oracle(a, b):
    """Welch p-value through the regularised incomplete beta at 40 digits."""
    a = [mpmath.mpf(x) for x in a]
    b = [mpmath.mpf(x) for x in b]
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((x - ma) ** 2 for x in a) / (na - 1)
    vb = sum((x - mb) ** 2 for x in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / mpmath.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    x = df / (df + t**2)
    return float(t), float(df), float(mpmath.betainc(df / 2, mpmath.mpf(1) / 2, 0, x, regularized=True))


def test_welch_matches_incomplete_beta_oracle():
    a = (0.1, -0.1, 0.05, -0.05, 0.0)
    b = (1.1, 0.9, 1.05, 0.95, 1.0)
    res = welch_t_test(a, b)
    t, df, p = t_pvalue_oracle(a, b)
    assert res.statistic == pytest.approx(t, rel=1e-12)
    assert res.df == pytest.approx(df, rel=1e-12)
    assert abs(res.pvalue - p) <= 1e-10
    assert not res.degenerate


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=8),
    st.lists(st.floats(-5, 5), min_size=2, max_size=8),
)
def test_welch_random_against_oracle(a, b):
    if np.var(a) < 1e-6 or np.var(b) < 1e-6:
        return
    res = welch_t_test(a, b)
    _, _, p = t_pvalue_oracle(a, b)
    assert abs(res.pvalue - p) <= 1e-9


def test_degenerate_cases():
    same = welch_t_test((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    assert same.degenerate and same.pvalue == 1.0 and same.statistic == 0.0
    apart = welch_t_test((0.0, 0.0), (5.0, 5.0))
    assert apart.degenerate and apart.pvalue == 0.0


def test_welch_needs_two_per_group():
    with pytest.raises(InsufficientReplicates):
        welch_t_test((1.0,), (1.0, 2.0))


def test_welch_swap_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.normal(size=4), rng.normal(1, 2, size=6)
        x, y = welch_t_test(a, b), welch_t_test(b, a)
        assert x.statistic == pytest.approx(-y.statistic, abs=1e-12)
        assert abs(x.pvalue - y.pvalue) <= 1e-12


def test_student_variant_matches_scipy():
    from scipy import stats

    rng = np.random.default_rng(1)
    a, b = rng.normal(size=5), rng.normal(0.5, 1, size=7)
    res = welch_t_test(a, b, equal_var=True)
    ref = stats.ttest_ind(a, b, equal_var=True)
    assert res.pvalue == pytest.approx(ref.pvalue, rel=1e-12)
    assert res.df == 10


def test_bh_examples():
    assert np.allclose(bh_adjust([0.01, 0.02, 0.03]), [0.03, 0.03, 0.03])
    assert np.allclose(bh_adjust([0.2]), [0.2])
    assert np.allclose(bh_adjust([0.4] * 5), [0.4] * 5)
    with pytest.raises(ValueOutOfRange):
        bh_adjust([0.5, 1.2])


def _bh_oracle(p):
    # step-up rule written out: adj_(i) = min_{j >= i} p_(j) m / j
    m = len(p)
    order = np.argsort(p)
    adj = np.empty(m)
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        running = min(running, p[i] * m / rank)
        adj[i] = running
    return adj


def test_bh_random_properties():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = rng.random(int(rng.integers(1, 40))) ** 3
        adj = bh_adjust(p)
        assert np.allclose(adj, _bh_oracle(p), atol=1e-14)
        assert np.all(adj >= p - 1e-15) and np.all(adj <= 1.0)
        o = np.argsort(p, kind="stable")
        assert np.all(np.diff(adj[o]) >= -1e-15)


def _screen(W, seed, n_i=5, n_0=5, baseline=5.0):
    return simulate_perturbation_screen(WeightedNetwork(np.asarray(W, float)), n_i, n_0, seed=seed, baseline=baseline)


def test_dataset_validation():
    with pytest.raises(LabelMismatch):
        ExpressionDataset(np.zeros((2, 2)), ["a", "a"])
    with pytest.raises(LabelMismatch):
        ExpressionDataset(np.zeros((2, 2)), ["a", "b"], ["WT", "KO:c"])
    with pytest.raises(DataError):
        ExpressionDataset(np.array([[0.0, np.nan]]), ["a", "b"])


def test_missing_wild_type_and_replicates():
    data = ExpressionDataset(np.zeros((3, 2)), ["a", "b"], ["WT", "KO:a", "KO:a"])
    with pytest.raises(MissingWildType):
        build_influence_matrix(data, 0.05)
    data = ExpressionDataset(np.arange(6.0).reshape(3, 2), ["a", "b"], ["WT", "WT", "KO:a"])
    with pytest.raises(InsufficientReplicates):
        build_influence_matrix(data, 0.05)


def test_identical_knockouts_give_empty_matrix():
    rng = np.random.default_rng(3)
    wt = rng.normal(size=(4, 3))
    values = np.vstack([wt, wt, wt])
    conds = ["WT"] * 4 + ["KO:g1"] * 4 + ["KO:g2"] * 4
    infl = build_influence_matrix(ExpressionDataset(values, ["g1", "g2", "g3"], conds), 0.05)
    assert infl.edge_count == 0
    assert infl.perturbed_ids == [0, 1]


def test_cutoff_one_fills_off_diagonal():
    data = _screen([[0, 0.8, 0], [0, 0, 0.8], [0, 0, 0]], seed=0)
    infl = build_influence_matrix(data, 1.0)
    assert infl.edge_count == 3 * 2
    assert not infl.entries[np.arange(3), infl.perturbed_ids].any()


def test_chain_recovery_rate():
    W = [[0, 2.0, 0], [0, 0, 2.0], [0, 0, 0]]
    exact = 0
    for seed in range(20):
        infl = build_influence_matrix(_screen(W, seed), 0.01)
        got = set(infl.edges())
        exact += got == {("G1", "G2"), ("G1", "G3"), ("G2", "G3")}
    assert exact >= 18


def test_entries_match_pvalues_and_nesting():
    rng = np.random.default_rng(4)
    W = np.triu(rng.random((8, 8)) < 0.3, 1) * 0.8
    data = _screen(W, seed=1)
    prev = None
    for c in (0.001, 0.01, 0.05, 0.2):
        infl = build_influence_matrix(data, c)
        off = np.ones_like(infl.entries)
        off[np.arange(infl.k), infl.perturbed_ids] = False
        assert np.array_equal(infl.entries, (infl.pvalues <= c) & off)
        if prev is not None:
            assert np.all(infl.entries >= prev)
        prev = infl.entries


def test_bh_adjusted_matrix_is_sparser():
    rng = np.random.default_rng(5)
    W = np.triu(rng.random((10, 10)) < 0.3, 1) * 0.8
    data = _screen(W, seed=2)
    raw = build_influence_matrix(data, 0.05)
    adj = build_influence_matrix(data, 0.05, adjust="bh")
    assert np.all(adj.entries <= raw.entries)


def test_scan_examples():
    data = _screen([[0, 0.8, 0], [0, 0, 0.8], [0, 0, 0]], seed=0)
    rows = cutoff_scan(data, [1.0, 1e-6])
    assert [r.cutoff for r in rows] == [1e-6, 1.0]
    assert rows[1].edges == 3 * 2
    assert rows[1].largest_scc == 3 and rows[1].largest_wcc == 3
    with pytest.raises(ValueOutOfRange):
        cutoff_scan(data, [])
    with pytest.raises(ValueOutOfRange):
        cutoff_scan(data, [0.0])


def test_scan_monotone_default_grid():
    rng = np.random.default_rng(6)
    W = np.triu(rng.random((12, 12)) < 0.25, 1) * 0.8
    rows = cutoff_scan(_screen(W, seed=3))
    assert len(rows) == 40
    assert rows[0].cutoff == pytest.approx(1e-6) and rows[-1].cutoff == pytest.approx(0.1)
    assert min(DEFAULT_GRID) == pytest.approx(1e-6)
    edges = [r.edges for r in rows]
    assert edges == sorted(edges)


def test_influence_matrix_views():
    entries = np.array([[1, 1, 0], [0, 1, 1]], dtype=bool)  # rows for genes 0 and 2
    infl = InfluenceMatrix(entries, [0, 2], ["a", "b", "c"])
    assert infl.entries[0, 0] == 0  # diagonal forced to zero
    assert infl.edges() == [("a", "b"), ("c", "b")]
    sq = infl.square()
    assert sq.shape == (3, 3) and not sq[1].any()
    pg = infl.perturbed_graph()
    assert pg.node_count == 2 and pg.edge_count == 0
    with pytest.raises(LabelMismatch):
        InfluenceMatrix(entries, [0, 0], ["a", "b", "c"])
