"""End-to-end network inference: orderings -> per-ordering DAGs -> consensus."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .consensus import ConsensusNetwork, build_consensus, lower_quantile, select_top_orderings, threshold_edges
from .errors import ValueOutOfRange
from .estimator import DagEstimate, LassoConfig, OrderingEstimator
from .influence import ExpressionDataset, InfluenceMatrix
from .orderings import CausalOrdering, OrderingUniverse, generate_orderings


def default_ordering_budget(p: int) -> int:
    return 1000 if p <= 1000 else 10_000


@dataclass
class InferenceConfig:
    q: float = 0.1
    tau: float = 0.25
    m: int | None = None
    strategy: str = "auto"
    exhaustive_max: int = 10
    seed: int = 0
    workers: int = 1
    lasso: LassoConfig = field(default_factory=LassoConfig)

    def __post_init__(self):
        if not (0.0 < self.q <= 1.0):
            raise ValueOutOfRange(f"q must lie in (0, 1], got {self.q}")
        if not (0.0 < self.tau <= 1.0):
            raise ValueOutOfRange(f"tau must lie in (0, 1], got {self.tau}")
        if self.m is not None and self.m < 1:
            raise ValueOutOfRange("ordering budget m must be >= 1")


@dataclass
class InferenceResult:
    universe: OrderingUniverse
    estimates: list[DagEstimate]
    selected: list[DagEstimate]
    consensus: ConsensusNetwork
    edges: list[tuple[int, int]]
    labels: list[str]
    timings: dict[str, float]

    def edge_labels(self) -> list[tuple[str, str]]:
        return [(self.labels[a], self.labels[b]) for a, b in self.edges]

    def score_summary(self, q: float) -> dict[str, float]:
        s = np.array([e.score for e in self.estimates])
        return {
            "min": float(s.min()),
            "median": float(np.median(s)),
            "max": float(s.max()),
            "L_q": lower_quantile(s, q),
        }


def ordering_universe(influence: InfluenceMatrix, cfg: InferenceConfig) -> OrderingUniverse:
    """Orderings of the perturbed genes (global gene indices)."""
    m = cfg.m or default_ordering_budget(influence.p)
    if influence.k == influence.p and influence.perturbed_ids == list(range(influence.p)):
        return generate_orderings(influence.graph(), m, cfg.seed, cfg.strategy, cfg.exhaustive_max)
    local = generate_orderings(influence.perturbed_graph(), m, cfg.seed, cfg.strategy, cfg.exhaustive_max)
    ids = influence.perturbed_ids
    mapped = [
        CausalOrdering(tuple(ids[i] for i in o.sequence), o.source, o.tag)
        for o in local.orderings
    ]
    return OrderingUniverse(mapped, local.exhaustive, local.component_counts)


def infer_network(
    expr: ExpressionDataset,
    influence: InfluenceMatrix,
    cfg: InferenceConfig = InferenceConfig(),
    orderings: Sequence[CausalOrdering] | OrderingUniverse | None = None,
) -> InferenceResult:
    """Run the three steps on steady-state data and an influence matrix.

    When the influence matrix has fewer rows than genes, the two-layer mode
    is used: orderings permute the perturbed genes and edges only leave them.
    Supplying ``orderings`` skips the first step.
    """
    timings = {}
    t0 = time.perf_counter()
    if orderings is None:
        universe = ordering_universe(influence, cfg)
    elif isinstance(orderings, OrderingUniverse):
        universe = orderings
    else:
        universe = OrderingUniverse(list(orderings), False)
    timings["orderings"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tf_ids = influence.perturbed_ids if influence.k < influence.p else None
    estimator = OrderingEstimator(expr, influence, cfg.lasso, tf_ids=tf_ids)
    estimates = estimator.fit_many(universe.orderings, cfg.workers)
    timings["estimation"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    selected = select_top_orderings(estimates, cfg.q)
    consensus = build_consensus(selected, cfg.q)
    edges = threshold_edges(consensus, cfg.tau)
    timings["consensus"] = time.perf_counter() - t0
    return InferenceResult(
        universe, estimates, selected, consensus, edges, list(expr.gene_labels), timings
    )
