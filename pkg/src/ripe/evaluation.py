"""Edge-set scoring against a gold standard and a random-graph significance test."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EdgeBudgetTooLarge, LabelMismatch, ValueOutOfRange

Edge = tuple


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    pvalue: float | None = None
    null_tp: list[int] | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("null_tp")
        return d


def _edge_set(edges: Iterable[Edge]) -> set:
    return {(a, b) for a, b in edges}


def precision_recall_f1(estimate: Iterable[Edge], truth: Iterable[Edge], labels=None) -> EvalReport:
    """Directed-edge precision, recall and F1.

    A reversed edge counts as one false positive and one false negative.
    Precision is 0 for an empty estimate and recall is 0 for an empty truth.
    """
    est, gold = _edge_set(estimate), _edge_set(truth)
    if labels is not None:
        space = set(labels)
        bad = {v for e in est | gold for v in e} - space
        if bad:
            raise LabelMismatch(f"edges reference unknown labels: {sorted(map(str, bad))[:5]}")
    tp = len(est & gold)
    fp = len(est) - tp
    fn = len(gold) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(tp, fp, fn, precision, recall, f1)


def _pair_space(nodes: Sequence, sources: Sequence | None):
    index = {v: i for i, v in enumerate(nodes)}
    p = len(nodes)
    src = list(range(p)) if sources is None else [index[s] for s in sources]
    return index, p, np.asarray(src, dtype=np.int64)


def sample_null_edges(
    m: int, nodes: Sequence, sources: Sequence | None = None, rng=None
) -> list[tuple]:
    """One uniform random directed graph with exactly ``m`` edges and no self-loops.

    With ``sources`` given, every edge starts at one of those nodes.
    """
    rng = np.random.default_rng(rng)
    _, p, src = _pair_space(nodes, sources)
    total = len(src) * (p - 1)
    if m > total:
        raise EdgeBudgetTooLarge(f"{m} edges do not fit into {total} admissible pairs")
    flat = rng.choice(total, m, replace=False)
    s_idx, off = np.divmod(flat, p - 1)
    s = src[s_idx]
    t = off + (off >= s)  # skip the diagonal
    return [(nodes[a], nodes[b]) for a, b in zip(s.tolist(), t.tolist())]


def er_significance(
    estimate: Iterable[Edge],
    gold: Iterable[Edge],
    nodes: Sequence,
    trials: int = 10_000,
    seed: int = 0,
    sources: Sequence | None = None,
) -> tuple[float, np.ndarray]:
    """Random-graph p-value for the number of true positives in ``estimate``.

    Each trial draws a graph with ``|estimate|`` edges (sources restricted
    to ``sources`` in the two-layer setting) and counts its overlap with
    ``gold``.  The p-value is ``(#{null TP >= observed} + 1) / (trials + 1)``.
    Returns the p-value and the per-trial null TP counts.
    """
    if trials < 1:
        raise ValueOutOfRange("trials must be >= 1")
    est, gold = _edge_set(estimate), _edge_set(gold)
    index, p, src = _pair_space(nodes, sources)
    for e in est | gold:
        if e[0] not in index or e[1] not in index:
            raise LabelMismatch(f"edge {e} uses a label outside the node set")
    observed = len(est & gold)
    m = len(est)
    total = len(src) * (p - 1)
    if m > total:
        raise EdgeBudgetTooLarge(f"{m} edges do not fit into {total} admissible pairs")
    # encode gold edges in the same flat pair index used by the sampler
    pos_of_src = {int(s): r for r, s in enumerate(src)}
    gold_flat = []
    for a, b in gold:
        ia, ib = index[a], index[b]
        if ia in pos_of_src and ia != ib:
            gold_flat.append(pos_of_src[ia] * (p - 1) + (ib - (ib > ia)))
    gold_flat = np.asarray(sorted(gold_flat), dtype=np.int64)
    null = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        draw = np.random.default_rng([seed, t]).choice(total, m, replace=False)
        null[t] = np.isin(draw, gold_flat, assume_unique=True).sum() if len(gold_flat) else 0
    pvalue = (int((null >= observed).sum()) + 1) / (trials + 1)
    return pvalue, null


def null_histogram(null: np.ndarray) -> list[tuple[int, int]]:
    counts = np.bincount(np.asarray(null, dtype=np.int64))
    return [(tp, int(c)) for tp, c in enumerate(counts.tolist()) if c]
