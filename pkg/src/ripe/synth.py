"""Synthetic benchmark generators.

Ground-truth networks (random DAGs with hub genes, random cyclic graphs),
Gaussian structural-equation samples, exact influence matrices, simulated
knockout screens and controlled corruption of influence matrices.

Weight convention: ``W[j, i]`` is the effect of gene ``j`` on gene ``i``, so a
sample row ``x`` solves ``x = x @ W + z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import InfeasibleTarget, SingularSystem, ValueOutOfRange
from .graph import DirectedGraph, is_acyclic, scc_decompose
from .influence import KO_PREFIX, WILD_TYPE, ExpressionDataset, InfluenceMatrix

STABILITY_TARGET = 0.95


def default_labels(p: int) -> list[str]:
    return [f"G{i + 1}" for i in range(p)]


@dataclass
class WeightedNetwork:
    weights: np.ndarray
    labels: list[str] = field(default_factory=list)
    cyclic: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        np.fill_diagonal(self.weights, 0.0)
        if not self.labels:
            self.labels = default_labels(self.p)

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def graph(self) -> DirectedGraph:
        return DirectedGraph.from_matrix(self.weights != 0, self.labels)

    def edges(self) -> list[tuple[str, str]]:
        rows, cols = np.nonzero(self.weights)
        return [(self.labels[r], self.labels[c]) for r, c in zip(rows.tolist(), cols.tolist())]

    def weighted_edges(self) -> list[tuple[str, str, float]]:
        rows, cols = np.nonzero(self.weights)
        return [
            (self.labels[r], self.labels[c], float(self.weights[r, c]))
            for r, c in zip(rows.tolist(), cols.tolist())
        ]


def spectral_radius(matrix) -> float:
    m = np.asarray(matrix, dtype=float)
    if m.size == 0 or not m.any():
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def random_dag(
    p: int,
    edge_target: int,
    hub_count: int = 0,
    seed: int = 0,
    hub_share: float = 0.5,
) -> WeightedNetwork:
    """Random acyclic skeleton with exactly ``edge_target`` edges (unit weights).

    Nodes are placed in a random causal order.  ``hub_count`` nodes near the
    top of the order receive roughly ``hub_share`` of the edges as outgoing
    edges; the rest are drawn uniformly among forward pairs.  For ``p >= 20``
    the first two nodes in the order stay parentless.
    """
    if p < 1 or edge_target < 0:
        raise InfeasibleTarget("need p >= 1 and a non-negative edge target")
    rng = np.random.default_rng(seed)
    order = rng.permutation(p)
    roots = 2 if p >= 20 else 0
    # allowed pairs (a, b) in order positions with a < b and b not a reserved root
    pairs = [(a, b) for b in range(max(roots, 1), p) for a in range(b)]
    if edge_target > len(pairs):
        raise InfeasibleTarget(
            f"{edge_target} edges requested but only {len(pairs)} acyclic pairs available"
        )
    chosen: set[tuple[int, int]] = set()
    hub_count = min(hub_count, max(p - 1, 0))
    if hub_count and edge_target:
        # hubs sit among the early positions so they can reach many targets
        hub_pos = sorted(rng.choice(max(p // 3, hub_count), hub_count, replace=False).tolist())
        hub_edges = int(round(hub_share * edge_target))
        candidates = [(a, b) for (a, b) in pairs if a in set(hub_pos)]
        take = min(hub_edges, len(candidates))
        for i in rng.choice(len(candidates), take, replace=False).tolist():
            chosen.add(candidates[i])
    remaining = [pr for pr in pairs if pr not in chosen]
    need = edge_target - len(chosen)
    for i in rng.choice(len(remaining), need, replace=False).tolist():
        chosen.add(remaining[i])
    W = np.zeros((p, p))
    for a, b in chosen:
        W[order[a], order[b]] = 1.0
    return WeightedNetwork(W, cyclic=False)


def random_cyclic(
    p: int,
    edge_target: int,
    seed: int = 0,
    feedback: float | None = None,
    force_triangle: bool = False,
) -> WeightedNetwork:
    """Random directed graph with ``edge_target`` edges and at least one cycle.

    By default edges are placed uniformly over all ordered pairs.  With
    ``feedback`` set, a random acyclic backbone carries all but
    ``max(1, round(feedback * edge_target))`` edges and each remaining edge
    points from a node back to one of its ancestors, closing a feedback
    loop.  Uniform graphs with about two edges per node contain one giant
    strongly connected component; the feedback mode keeps components small.
    """
    max_edges = p * (p - 1)
    if p < 2 or edge_target < 2 or edge_target > max_edges:
        raise InfeasibleTarget(f"cannot place {edge_target} edges with a cycle on {p} nodes")
    if force_triangle and (p < 3 or edge_target < 3):
        raise InfeasibleTarget("a triangle needs p >= 3 and at least 3 edges")
    rng = np.random.default_rng(seed)
    if feedback is not None:
        return _backbone_with_feedback(p, edge_target, feedback, rng)
    W = np.zeros((p, p))
    if force_triangle:
        tri = rng.permutation(p)[:3]
        W[tri[0], tri[1]] = W[tri[1], tri[2]] = W[tri[2], tri[0]] = 1.0
    free = np.flatnonzero((W == 0) & ~np.eye(p, dtype=bool))
    need = edge_target - int(W.sum())
    W.flat[rng.choice(free, need, replace=False)] = 1.0
    if is_acyclic(DirectedGraph.from_matrix(W)):
        # close a 2-cycle on a random edge and drop another edge to keep the count
        rows, cols = np.nonzero(W)
        k = int(rng.integers(len(rows)))
        a, b = rows[k], cols[k]
        others = [(r, c) for r, c in zip(rows, cols) if (r, c) != (a, b)]
        r, c = others[int(rng.integers(len(others)))]
        W[r, c] = 0.0
        W[b, a] = 1.0
    return WeightedNetwork(W, cyclic=True)


def _backbone_with_feedback(p, edge_target, feedback, rng) -> WeightedNetwork:
    if not (0.0 <= feedback <= 1.0):
        raise ValueOutOfRange("feedback must lie in [0, 1]")
    n_back = max(1, int(round(feedback * edge_target)))
    n_fwd = edge_target - n_back
    if n_fwd < 1 or n_fwd > p * (p - 1) // 2:
        raise InfeasibleTarget(f"cannot split {edge_target} edges into a backbone and feedback")
    order = rng.permutation(p)
    iu = np.triu_indices(p, 1)
    pick = rng.choice(iu[0].shape[0], n_fwd, replace=False)
    W = np.zeros((p, p))
    W[order[iu[0][pick]], order[iu[1][pick]]] = 1.0
    reach = _reachability(W != 0)
    np.fill_diagonal(reach, False)
    # ancestor u reaches v; the feedback edge is v -> u
    cand = np.argwhere(reach & (W.T == 0))
    if len(cand) < n_back:
        raise InfeasibleTarget("backbone too sparse to host the requested feedback edges")
    for u, v in cand[rng.permutation(len(cand))[:n_back]]:
        W[v, u] = 1.0
    return WeightedNetwork(W, cyclic=True)


def assign_weights(
    skeleton: WeightedNetwork,
    magnitude_range: tuple[float, float] | None = (0.2, 0.8),
    seed: int = 0,
    fixed: float | None = None,
) -> WeightedNetwork:
    """Put weights on the edges of ``skeleton``.

    With ``fixed`` every edge gets that weight; otherwise magnitudes are
    uniform on ``magnitude_range`` with random signs.  A cyclic network whose
    ``|W|`` has spectral radius at or above 1 is rescaled to radius 0.95.
    """
    mask = skeleton.weights != 0
    W = np.zeros_like(skeleton.weights)
    if fixed is not None:
        W[mask] = float(fixed)
    else:
        lo, hi = magnitude_range
        if not (0 < lo < hi):
            raise ValueOutOfRange("magnitude range must satisfy 0 < lo < hi")
        rng = np.random.default_rng(seed)
        k = int(mask.sum())
        mags = rng.uniform(lo, hi, k)
        signs = rng.choice([-1.0, 1.0], k)
        W[mask] = mags * signs
    net = WeightedNetwork(W, list(skeleton.labels), skeleton.cyclic)
    if net.cyclic:
        rho = spectral_radius(np.abs(W))
        if rho >= 1.0:
            net.weights *= STABILITY_TARGET / rho
    return net


def _check_stable(W: np.ndarray):
    if spectral_radius(np.abs(W)) >= 1.0:
        raise SingularSystem("spectral radius of |W| is >= 1; stabilise the network first")


def _solve_rows(W: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # rows x with x (I - W) = rhs
    p = W.shape[0]
    try:
        return np.linalg.solve((np.eye(p) - W).T, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def sem_covariance(network: WeightedNetwork, noise_sd: float = 1.0) -> np.ndarray:
    """Analytic covariance ``(I - W^T)^{-1} (I - W)^{-1} sigma^2``."""
    inv = np.linalg.inv(np.eye(network.p) - network.weights)
    return noise_sd**2 * inv.T @ inv


def sample_sem(
    network: WeightedNetwork,
    n: int,
    noise_sd: float = 1.0,
    seed: int = 0,
    intercepts=None,
) -> ExpressionDataset:
    """Draw ``n`` wild-type samples from the linear Gaussian SEM."""
    if noise_sd <= 0:
        raise ValueOutOfRange("noise_sd must be positive")
    W = network.weights
    _check_stable(W)
    rng = np.random.default_rng(seed)
    Z = rng.normal(0.0, noise_sd, size=(n, network.p))
    if intercepts is not None:
        Z = Z + np.broadcast_to(np.asarray(intercepts, dtype=float), (network.p,))
    X = _solve_rows(W, Z)
    return ExpressionDataset(X, list(network.labels), [WILD_TYPE] * n)


def _reachability(adj: np.ndarray) -> np.ndarray:
    dist = shortest_path(csr_matrix(adj.astype(float)), method="D", unweighted=True)
    return np.isfinite(dist)


def true_influence(network: WeightedNetwork) -> InfluenceMatrix:
    """Exact influence matrix: ``i`` influences ``j`` iff ``j`` is reachable from ``i``."""
    adj = network.weights != 0
    reach = _reachability(adj)
    # a node only reaches itself through a cycle; the diagonal is dropped anyway
    np.fill_diagonal(reach, False)
    return InfluenceMatrix.from_square(reach, network.labels)


def simulate_perturbation_screen(
    network: WeightedNetwork,
    n_i: int = 5,
    n_0: int = 5,
    noise_sd: float = 1.0,
    seed: int = 0,
    knockouts: Sequence[int] | None = None,
    baseline: float | np.ndarray = 0.0,
) -> ExpressionDataset:
    """Wild-type replicates plus ``n_i`` replicates of each single-gene knockout.

    A knockout of ``g`` replaces ``g``'s structural equation by ``X_g = 0``.
    ``baseline`` adds gene-wise intercepts to every equation so that wild-type
    means are nonzero and knockouts shift their descendants' means.
    """
    W = network.weights
    _check_stable(W)
    p = network.p
    b = np.broadcast_to(np.asarray(baseline, dtype=float), (p,)).copy()
    knockouts = list(range(p)) if knockouts is None else [int(g) for g in knockouts]
    rng = np.random.default_rng(seed)
    blocks = [_solve_rows(W, rng.normal(0.0, noise_sd, (n_0, p)) + b)]
    conditions = [WILD_TYPE] * n_0
    try:
        inv = np.linalg.inv(np.eye(p) - W)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    for g in knockouts:
        Z = rng.normal(0.0, noise_sd, (n_i, p)) + b
        Z[:, g] = 0.0
        # I - W_g = (I - W) + W[:, g] e_g^T, so Sherman-Morrison on the shared inverse
        u = W[:, g]
        Y = Z @ inv
        X = Y - np.outer(Y @ u, inv[g]) / (1.0 + inv[g] @ u)
        X[:, g] = 0.0
        blocks.append(X)
        conditions += [KO_PREFIX + network.labels[g]] * n_i
    X = np.vstack(blocks)
    return ExpressionDataset(X, list(network.labels), conditions)


@dataclass
class NoiseSpec:
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    reverse_prop: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("fp_rate", "fn_rate", "reverse_prop"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueOutOfRange(f"{name} must lie in [0, 1], got {v}")


def calibrate_rate(target_count: float, cells: int) -> float:
    """Per-cell probability giving ``target_count`` expected flips among ``cells``."""
    if cells <= 0:
        raise ValueOutOfRange("no cells available")
    return min(1.0, target_count / cells)


def perturb_influence(
    P: InfluenceMatrix, spec: NoiseSpec
) -> tuple[InfluenceMatrix, dict]:
    """Corrupt an influence matrix with reversals, false negatives and false positives.

    Reversals flip ``round(reverse_prop * edges)`` present edges; false
    negatives clear each original edge with probability ``fn_rate``; false
    positives set each originally absent off-diagonal cell with probability
    ``fp_rate``.  Returns the new matrix and a dict with expected and
    realised error counts.
    """
    rng = np.random.default_rng(spec.seed)
    E = P.entries.copy()
    k, p = E.shape
    offdiag = np.ones((k, p), dtype=bool)
    if k:
        offdiag[np.arange(k), P.perturbed_ids] = False
    present = E & offdiag
    absent = ~E & offdiag

    fn_mask = present & (rng.random((k, p)) < spec.fn_rate)
    fp_mask = absent & (rng.random((k, p)) < spec.fp_rate)
    out = E & ~fn_mask
    out |= fp_mask

    reversed_count = 0
    n_rev = int(round(spec.reverse_prop * present.sum()))
    if n_rev:
        row_of = {g: r for r, g in enumerate(P.perturbed_ids)}
        rows, cols = np.nonzero(present & ~fn_mask)
        for idx in rng.permutation(len(rows)).tolist():
            if reversed_count >= n_rev:
                break
            r, c = rows[idx], cols[idx]
            src = P.perturbed_ids[r]
            if c not in row_of:
                continue  # target not perturbed: no row to receive the reversed edge
            out[r, c] = False
            out[row_of[c], src] = True
            reversed_count += 1

    info = {
        "expected_fp": float(spec.fp_rate * absent.sum()),
        "expected_fn": float(spec.fn_rate * present.sum()),
        "fp": int(fp_mask.sum()),
        "fn": int(fn_mask.sum()),
        "reversed": reversed_count,
    }
    return InfluenceMatrix(out, list(P.perturbed_ids), list(P.gene_labels)), info


def has_cycle(network: WeightedNetwork) -> bool:
    return max(scc_decompose(network.graph()).sizes, default=0) >= 2
