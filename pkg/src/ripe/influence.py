"""Influence matrix estimation from perturbation screens.

Each knockout's replicates are compared gene by gene against the wild-type
replicates with a two-sample t-test; p-values at or below a cutoff become
ones in the binary k x p influence matrix.  ``cutoff_scan`` tabulates the
influence graph's edge count and largest component sizes over a grid of
cutoffs, the diagnostic used to pick a cutoff by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import (
    DataError,
    InsufficientReplicates,
    LabelMismatch,
    MissingWildType,
    ValueOutOfRange,
)
from .graph import DirectedGraph, component_size_summary

WILD_TYPE = "WT"
KO_PREFIX = "KO:"

DEFAULT_GRID = tuple(float(x) for x in np.logspace(-6, -1, 40))


@dataclass
class ExpressionDataset:
    """Samples x genes expression values with one condition tag per sample.

    Conditions are ``"WT"`` for wild-type samples and ``"KO:<gene>"`` for a
    knockout of ``<gene>``.
    """

    values: np.ndarray
    gene_labels: list[str]
    conditions: list[str] = field(default_factory=list)
    sample_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DataError("expression values must be a 2-d array")
        n, p = self.values.shape
        self.gene_labels = [str(g) for g in self.gene_labels]
        if len(self.gene_labels) != p:
            raise LabelMismatch(f"{len(self.gene_labels)} gene labels for {p} columns")
        if len(set(self.gene_labels)) != p:
            raise LabelMismatch("gene labels must be unique")
        if not self.conditions:
            self.conditions = [WILD_TYPE] * n
        if len(self.conditions) != n:
            raise DataError(f"{len(self.conditions)} condition tags for {n} samples")
        if not self.sample_ids:
            self.sample_ids = [f"s{i + 1}" for i in range(n)]
        if not np.all(np.isfinite(self.values)):
            raise DataError("expression values contain missing or non-finite entries")
        known = set(self.gene_labels)
        for c in self.conditions:
            if c == WILD_TYPE:
                continue
            if not c.startswith(KO_PREFIX) or c[len(KO_PREFIX):] not in known:
                raise LabelMismatch(f"unknown condition tag {c!r}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def wild_type(self) -> np.ndarray:
        mask = np.array([c == WILD_TYPE for c in self.conditions], dtype=bool)
        return self.values[mask]

    def knockout_genes(self) -> list[int]:
        """Indices of knocked-out genes, in gene-label order."""
        ko = {c[len(KO_PREFIX):] for c in self.conditions if c != WILD_TYPE}
        return [i for i, g in enumerate(self.gene_labels) if g in ko]

    def knockout(self, gene: int) -> np.ndarray:
        tag = KO_PREFIX + self.gene_labels[gene]
        mask = np.array([c == tag for c in self.conditions], dtype=bool)
        return self.values[mask]


@dataclass
class InfluenceMatrix:
    """Binary k x p matrix; row ``r`` holds the effects of knocking out ``perturbed_ids[r]``."""

    entries: np.ndarray
    perturbed_ids: list[int]
    gene_labels: list[str]
    pvalues: np.ndarray | None = None
    cutoff: float | None = None

    def __post_init__(self):
        self.entries = np.asarray(self.entries).astype(bool)
        self.perturbed_ids = [int(i) for i in self.perturbed_ids]
        k, p = self.entries.shape
        if len(self.perturbed_ids) != k:
            raise LabelMismatch("one perturbed gene per influence row required")
        if len(self.gene_labels) != p:
            raise LabelMismatch("one gene label per influence column required")
        if len(set(self.perturbed_ids)) != k:
            raise LabelMismatch("perturbed genes must be distinct")
        if k:
            self.entries[np.arange(k), self.perturbed_ids] = False

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def edge_count(self) -> int:
        return int(self.entries.sum())

    @classmethod
    def from_square(cls, matrix, gene_labels: Sequence[str]) -> "InfluenceMatrix":
        m = np.asarray(matrix).astype(bool)
        return cls(m.copy(), list(range(m.shape[0])), list(gene_labels))

    def square(self) -> np.ndarray:
        """p x p boolean matrix; rows of unperturbed genes are empty."""
        full = np.zeros((self.p, self.p), dtype=bool)
        full[self.perturbed_ids] = self.entries
        return full

    def graph(self) -> DirectedGraph:
        return DirectedGraph.from_matrix(self.square(), self.gene_labels)

    def perturbed_graph(self) -> DirectedGraph:
        """Influence graph restricted to the perturbed genes (local indices)."""
        sub = self.entries[:, self.perturbed_ids]
        return DirectedGraph.from_matrix(
            sub, [self.gene_labels[i] for i in self.perturbed_ids]
        )

    def edges(self) -> list[tuple[str, str]]:
        rows, cols = np.nonzero(self.entries)
        return [
            (self.gene_labels[self.perturbed_ids[r]], self.gene_labels[c])
            for r, c in zip(rows.tolist(), cols.tolist())
        ]


class TTestResult(NamedTuple):
    statistic: float
    df: float
    pvalue: float
    degenerate: bool


def _t_arrays(a: np.ndarray, b: np.ndarray, equal_var: bool):
    # Column-wise two-sample t statistics for a (na x p) against b (nb x p).
    na, nb = a.shape[0], b.shape[0]
    ma, mb = a.mean(axis=0), b.mean(axis=0)
    va, vb = a.var(axis=0, ddof=1), b.var(axis=0, ddof=1)
    diff = ma - mb
    if equal_var:
        df = np.full(diff.shape, float(na + nb - 2))
        pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        se2 = pooled * (1.0 / na + 1.0 / nb)
    else:
        sa, sb = va / na, vb / nb
        se2 = sa + sb
        denom = sa**2 / (na - 1) + sb**2 / (nb - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            df = np.where(denom > 0, se2**2 / np.where(denom > 0, denom, 1.0), na + nb - 2.0)
    degenerate = se2 <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(degenerate, 0.0, diff / np.sqrt(np.where(degenerate, 1.0, se2)))
    pval = 2.0 * stats.t.sf(np.abs(t), df)
    separated = degenerate & (diff != 0)
    t = np.where(separated, np.copysign(np.inf, diff), t)
    pval = np.where(degenerate, np.where(separated, 0.0, 1.0), pval)
    return t, df, np.minimum(pval, 1.0), degenerate


def welch_t_test(a, b, equal_var: bool = False) -> TTestResult:
    """Two-sample t-test of ``a`` against ``b`` with a two-sided p-value.

    Welch's unequal-variance statistic with Welch-Satterthwaite degrees of
    freedom is the default; ``equal_var=True`` gives the pooled Student test.
    When both groups have zero variance the result is flagged degenerate and
    the p-value is 0 if the means differ and 1 otherwise.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 1)
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise InsufficientReplicates("each group needs at least two observations")
    t, df, pval, deg = _t_arrays(a, b, equal_var)
    return TTestResult(float(t[0]), float(df[0]), float(pval[0]), bool(deg[0]))


def bh_adjust(pvalues) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values (capped at 1)."""
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        return p.copy()
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueOutOfRange("p-values must lie in [0, 1]")
    return stats.false_discovery_control(p.ravel(), method="bh").reshape(p.shape)


def influence_pvalues(
    data: ExpressionDataset, equal_var: bool = False
) -> tuple[np.ndarray, list[int]]:
    """Raw k x p p-value matrix (diagonal cells set to 1) and the perturbed gene indices."""
    wt = data.wild_type()
    if wt.shape[0] < 2:
        raise MissingWildType(f"need at least 2 wild-type samples, found {wt.shape[0]}")
    perturbed = data.knockout_genes()
    pv = np.ones((len(perturbed), data.p))
    for r, g in enumerate(perturbed):
        ko = data.knockout(g)
        if ko.shape[0] < 2:
            raise InsufficientReplicates(
                f"knockout of {data.gene_labels[g]} has {ko.shape[0]} replicate(s); need 2"
            )
        _, _, pv[r], _ = _t_arrays(ko, wt, equal_var)
        pv[r, g] = 1.0
    return pv, perturbed


def _adjusted(pv: np.ndarray, perturbed: list[int], adjust: str) -> np.ndarray:
    if adjust in (None, "none"):
        return pv
    if adjust.lower() != "bh":
        raise ValueError(f"unknown adjustment {adjust!r}")
    k = len(perturbed)
    mask = np.ones(pv.shape, dtype=bool)
    mask[np.arange(k), perturbed] = False
    out = pv.copy()
    out[mask] = bh_adjust(pv[mask])
    return out


def _check_cutoff(cutoff: float):
    if not (0.0 < cutoff <= 1.0):
        raise ValueOutOfRange(f"cutoff must lie in (0, 1], got {cutoff}")


def build_influence_matrix(
    data: ExpressionDataset,
    cutoff: float,
    adjust: str = "none",
    equal_var: bool = False,
) -> InfluenceMatrix:
    _check_cutoff(cutoff)
    raw, perturbed = influence_pvalues(data, equal_var)
    pv = _adjusted(raw, perturbed, adjust)
    entries = pv <= cutoff
    if perturbed:
        entries[np.arange(len(perturbed)), perturbed] = False
    return InfluenceMatrix(entries, perturbed, list(data.gene_labels), pv, cutoff)


class ScanRow(NamedTuple):
    cutoff: float
    edges: int
    largest_scc: int
    largest_wcc: int


def cutoff_scan(
    data: ExpressionDataset,
    grid: Sequence[float] = DEFAULT_GRID,
    adjust: str = "none",
    equal_var: bool = False,
) -> list[ScanRow]:
    """Influence-graph size statistics per cutoff, sorted by ascending cutoff."""
    grid = sorted(float(c) for c in grid)
    if not grid:
        raise ValueOutOfRange("cutoff grid is empty")
    for c in grid:
        _check_cutoff(c)
    raw, perturbed = influence_pvalues(data, equal_var)
    pv = _adjusted(raw, perturbed, adjust)
    rows = []
    for c in grid:
        infl = InfluenceMatrix(pv <= c, perturbed, list(data.gene_labels))
        scc, wcc, edges = component_size_summary(infl.graph())
        rows.append(ScanRow(c, edges, scc, wcc))
    return rows
