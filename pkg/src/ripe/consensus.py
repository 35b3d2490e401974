"""Consensus network from the best-scoring ordering estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, GeneSetMismatch, ValueOutOfRange
from .estimator import DagEstimate


@dataclass
class ConsensusNetwork:
    confidence: np.ndarray
    sign: np.ndarray
    magnitude: np.ndarray
    members: int
    q: float | None = None
    labels: list[str] | None = None

    @property
    def p(self) -> int:
        return self.confidence.shape[0]

    def rows(self):
        """``(source, target, confidence, sign, magnitude)`` for every nonzero-confidence cell."""
        src, tgt = np.nonzero(self.confidence)
        for i, j in zip(src.tolist(), tgt.tolist()):
            yield i, j, float(self.confidence[i, j]), int(self.sign[i, j]), float(self.magnitude[i, j])


def lower_quantile(scores: Sequence[float], q: float) -> float:
    """``ceil(q * M)``-th smallest score (at least the smallest)."""
    s = np.sort(np.asarray(scores, dtype=float))
    k = max(1, math.ceil(q * len(s) - 1e-12))
    return float(s[k - 1])


def select_top_orderings(estimates: Sequence[DagEstimate], q: float = 0.1) -> list[DagEstimate]:
    """Estimates scoring at or below the lower ``q`` quantile; boundary ties are kept."""
    if not estimates:
        raise EmptyInput("no estimates to select from")
    if not (0.0 < q <= 1.0):
        raise ValueOutOfRange(f"q must lie in (0, 1], got {q}")
    cut = lower_quantile([e.score for e in estimates], q)
    return [e for e in estimates if e.score <= cut]


def build_consensus(members: Sequence[DagEstimate], q: float | None = None) -> ConsensusNetwork:
    if not members:
        raise EmptyInput("consensus needs at least one estimate")
    p = members[0].p
    labels = members[0].labels
    for e in members:
        if e.p != p or (labels is not None and e.labels is not None and list(e.labels) != list(labels)):
            raise GeneSetMismatch("estimates are over different gene sets")
    count = np.zeros((p, p))
    sign_sum = np.zeros((p, p))
    abs_sum = np.zeros((p, p))
    for e in members:
        nz = e.values != 0
        s, t, v = e.sources[nz], e.targets[nz], e.values[nz]
        np.add.at(count, (s, t), 1.0)
        np.add.at(sign_sum, (s, t), np.sign(v))
        np.add.at(abs_sum, (s, t), np.abs(v))
    size = len(members)
    return ConsensusNetwork(
        count / size,
        np.sign(sign_sum).astype(np.int8),
        abs_sum / size,
        size,
        q,
        list(labels) if labels is not None else None,
    )


def threshold_edges(net: ConsensusNetwork, tau: float = 0.25) -> list[tuple[int, int]]:
    """Directed edges with confidence at least ``tau`` (may contain cycles)."""
    if not (0.0 < tau <= 1.0):
        raise ValueOutOfRange(f"tau must lie in (0, 1], got {tau}")
    # confidences are k/|Q|; compare with a little slack so 1/4 >= 0.25 holds exactly
    src, tgt = np.nonzero(net.confidence >= tau - 1e-12)
    return list(zip(src.tolist(), tgt.tolist()))
