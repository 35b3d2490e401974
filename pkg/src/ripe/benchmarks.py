"""Synthetic benchmark presets and replicate runners."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .estimator import LassoConfig
from .evaluation import EvalReport, precision_recall_f1
from .influence import InfluenceMatrix
from .orderings import OrderingUniverse
from .pipeline import InferenceConfig, infer_network, ordering_universe
from .synth import (
    WeightedNetwork,
    assign_weights,
    random_cyclic,
    random_dag,
    sample_sem,
    simulate_perturbation_screen,
    true_influence,
)


@dataclass(frozen=True)
class Preset:
    name: str
    p: int
    edges: int
    n: int
    cyclic: bool = False
    hubs: int = 0
    fixed_weight: float | None = None
    weight_range: tuple[float, float] = (0.2, 0.8)
    feedback: float | None = None
    n_i: int = 5
    n_0: int = 5
    baseline: float = 2.0
    scale: bool = False


PRESETS = {
    "small20": Preset("small20", p=20, edges=25, n=50, hubs=3, fixed_weight=0.8),
    "dag100": Preset("dag100", p=100, edges=198, n=100, hubs=5, fixed_weight=0.8, n_i=3, n_0=5),
    "cyclic1000": Preset(
        "cyclic1000", p=1000, edges=1984, n=500, cyclic=True, feedback=0.02,
        n_i=2, n_0=5, scale=True,
    ),
}


def make_network(preset: Preset, seed: int) -> WeightedNetwork:
    if preset.cyclic:
        skeleton = random_cyclic(preset.p, preset.edges, seed=seed, feedback=preset.feedback)
    else:
        skeleton = random_dag(preset.p, preset.edges, preset.hubs, seed=seed)
    return assign_weights(skeleton, preset.weight_range, seed=seed, fixed=preset.fixed_weight)


def preset_config(preset: Preset, **overrides) -> InferenceConfig:
    lasso = overrides.pop("lasso", None) or LassoConfig(scale=preset.scale)
    return InferenceConfig(lasso=lasso, **overrides)


@dataclass
class ReplicateSummary:
    reports: list[EvalReport] = field(default_factory=list)

    def mean(self, attr: str) -> float:
        return float(np.mean([getattr(r, attr) for r in self.reports]))

    def std(self, attr: str) -> float:
        return float(np.std([getattr(r, attr) for r in self.reports]))

    def as_dict(self) -> dict:
        return {
            a: {"mean": self.mean(a), "std": self.std(a)}
            for a in ("precision", "recall", "f1")
        }


def run_replicates(
    network: WeightedNetwork,
    influence: InfluenceMatrix,
    n: int,
    replicates: int,
    cfg: InferenceConfig,
    seed: int = 0,
    orderings: OrderingUniverse | None = None,
) -> ReplicateSummary:
    """Score the pipeline over independent steady-state draws for one influence matrix.

    Orderings depend only on the influence matrix, so they are computed once
    and shared by all replicates.
    """
    truth = network.edges()
    universe = orderings if orderings is not None else ordering_universe(influence, cfg)
    summary = ReplicateSummary()
    for r in range(replicates):
        data = sample_sem(network, n, seed=int(np.random.SeedSequence([seed, r]).generate_state(1)[0]))
        result = infer_network(data, influence, cfg, universe)
        summary.reports.append(precision_recall_f1(result.edge_labels(), truth))
    return summary


def simulate_preset(preset: Preset, seed: int, screen: bool = True) -> dict:
    """Network, exact influence, steady-state data and (optionally) a knockout screen."""
    net = make_network(preset, seed)
    ss = np.random.SeedSequence(seed).spawn(2)
    steady = sample_sem(net, preset.n, seed=int(ss[0].generate_state(1)[0]))
    out = {
        "network": net,
        "influence": true_influence(net),
        "steady": steady,
    }
    if screen and preset.n_i > 0:
        out["screen"] = simulate_perturbation_screen(
            net, preset.n_i, preset.n_0, seed=int(ss[1].generate_state(1)[0]),
            baseline=preset.baseline,
        )
    return out


def preset_dict(preset: Preset) -> dict:
    return asdict(preset)
