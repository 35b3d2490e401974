"""Per-ordering DAG estimation by restricted lasso regressions.

For an ordering ``o`` every gene is regressed on its influence-graph parents
that precede it in ``o``, minimising

    n^-1 ||x_i - X_J theta||^2 + lambda_i ||theta||_1

by cyclic coordinate descent on the sample Gram matrix.  ``lambda_i`` follows
the error-rate rule ``shrink * 2 n^-1/2 * z`` with ``z`` the upper
``alpha / (2 p (i - 1))`` standard-normal quantile, ``i`` being the gene's
1-based position in the ordering.  The score of an ordering is the sum of
the attained per-gene objectives.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba
import numpy as np
from scipy.special import ndtri

from .errors import (
    GeneSetMismatch,
    InvalidPosition,
    LengthMismatch,
    NodeNotInOrdering,
    ValueOutOfRange,
)
from .influence import ExpressionDataset, InfluenceMatrix
from .orderings import CausalOrdering

SCORE_OBJECTIVE = "objective"
SCORE_PROFILE = "profile"


@dataclass(frozen=True)
class LassoConfig:
    alpha: float = 0.1
    shrink: float = 0.6
    tol: float = 1e-7
    max_iter: int = 10_000
    center: bool = True
    scale: bool = False
    score: str = SCORE_OBJECTIVE

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueOutOfRange("alpha must lie in (0, 1)")
        if self.shrink <= 0 or self.tol <= 0 or self.max_iter < 1:
            raise ValueOutOfRange("shrink, tol and max_iter must be positive")
        if self.score not in (SCORE_OBJECTIVE, SCORE_PROFILE):
            raise ValueOutOfRange(f"unknown score {self.score!r}")


def lambda_schedule(n: int, p: int, i: int, cfg: LassoConfig = LassoConfig()) -> float:
    """Penalty for the gene at 1-based position ``i`` of an ordering."""
    if i < 2:
        raise InvalidPosition("the penalty is defined for positions i >= 2")
    if n < 1 or p < 1:
        raise ValueOutOfRange("n and p must be positive")
    level = cfg.alpha / (2.0 * p * (i - 1))
    z = -ndtri(level)
    return float(cfg.shrink * 2.0 * z / np.sqrt(n))


def lambda_vector(n: int, p: int, cfg: LassoConfig) -> np.ndarray:
    """Penalties for positions 1..p (entry 0 unused, set to 0)."""
    i = np.arange(2, p + 1, dtype=float)
    lam = np.zeros(p)
    lam[1:] = cfg.shrink * 2.0 * (-ndtri(cfg.alpha / (2.0 * p * (i - 1)))) / np.sqrt(n)
    return lam


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True, nogil=True)
def _cd(G, J, c, lam, tol, max_iter, theta):
    """Coordinate descent on the Gram form; returns (sweeps, converged).

    ``G`` is indexed through ``J``; ``c`` holds the response correlations for
    the entries of ``J``.  ``theta`` is used as the start and overwritten.
    """
    m = J.shape[0]
    g = c.copy()
    for a in range(m):
        if theta[a] != 0.0:
            ja = J[a]
            for b in range(m):
                g[b] -= G[J[b], ja] * theta[a]
    sweeps = 0
    full = True
    while sweeps < max_iter:
        sweeps += 1
        delta_max = 0.0
        for a in range(m):
            if not full and theta[a] == 0.0:
                continue
            ja = J[a]
            gaa = G[ja, ja]
            if gaa <= 0.0:
                continue
            z = 2.0 * (g[a] + gaa * theta[a])
            if z > lam:
                new = (z - lam) / (2.0 * gaa)
            elif z < -lam:
                new = (z + lam) / (2.0 * gaa)
            else:
                new = 0.0
            d = new - theta[a]
            if d != 0.0:
                theta[a] = new
                for b in range(m):
                    g[b] -= G[J[b], ja] * d
                ad = abs(d)
                if ad > delta_max:
                    delta_max = ad
        if delta_max < tol:
            if full:
                return sweeps, True
            full = True
        else:
            full = False
    return sweeps, False


@numba.njit(cache=True, nogil=True)
def _fit_positions(S, infl, order, lam, start, stop, tol, max_iter):
    """Fit genes at ordering positions ``start..stop-1``.

    Returns edge arrays (source, target, weight), per-position mean squared
    residual and l1 norm, and a per-position convergence flag.
    """
    p = order.shape[0]
    cap = 4 * p + 16
    src = np.empty(cap, dtype=np.int64)
    tgt = np.empty(cap, dtype=np.int64)
    val = np.empty(cap, dtype=np.float64)
    nnz = 0
    count = stop - start
    mse = np.empty(count, dtype=np.float64)
    l1 = np.zeros(count, dtype=np.float64)
    ok = np.ones(count, dtype=np.bool_)
    J = np.empty(p, dtype=np.int64)
    for pos in range(start, stop):
        i = order[pos]
        m = 0
        for q in range(pos):
            j = order[q]
            if infl[j, i]:
                J[m] = j
                m += 1
        slot = pos - start
        if m == 0:
            mse[slot] = S[i, i]
            continue
        Jm = J[:m].copy()
        c = np.empty(m, dtype=np.float64)
        for a in range(m):
            c[a] = S[Jm[a], i]
        theta = np.zeros(m, dtype=np.float64)
        _, conv = _cd(S, Jm, c, lam[pos], tol, max_iter, theta)
        ok[slot] = conv
        # exact residual from the active set: S_ii - 2 theta'c + theta'G theta
        quad = 0.0
        lin = 0.0
        norm1 = 0.0
        for a in range(m):
            ta = theta[a]
            if ta == 0.0:
                continue
            lin += ta * c[a]
            norm1 += abs(ta)
            for b in range(m):
                tb = theta[b]
                if tb != 0.0:
                    quad += ta * S[Jm[a], Jm[b]] * tb
            if nnz == cap:
                cap *= 2
                src2 = np.empty(cap, dtype=np.int64)
                tgt2 = np.empty(cap, dtype=np.int64)
                val2 = np.empty(cap, dtype=np.float64)
                src2[:nnz] = src[:nnz]
                tgt2[:nnz] = tgt[:nnz]
                val2[:nnz] = val[:nnz]
                src, tgt, val = src2, tgt2, val2
            src[nnz] = Jm[a]
            tgt[nnz] = i
            val[nnz] = ta
            nnz += 1
        r = S[i, i] - 2.0 * lin + quad
        mse[slot] = r if r > 0.0 else 0.0
        l1[slot] = norm1
    return src[:nnz].copy(), tgt[:nnz].copy(), val[:nnz].copy(), mse, l1, ok


# ---------------------------------------------------------------------------


class LassoFit(NamedTuple):
    coef: np.ndarray
    converged: bool
    sweeps: int


def lasso_solve(y, X, lam: float, cfg: LassoConfig = LassoConfig()) -> LassoFit:
    """Minimise ``n^-1 ||y - X theta||^2 + lam ||theta||_1`` by coordinate descent.

    Columns (and ``y``) are centred first when ``cfg.center`` is set.  If the
    sweep budget runs out, the last iterate is returned with
    ``converged=False`` and a warning is issued.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    n = y.shape[0]
    if X.ndim == 1:
        X = X.reshape(n, -1)
    if X.shape[0] != n:
        raise LengthMismatch("X and y have different numbers of rows")
    m = X.shape[1]
    if m == 0:
        return LassoFit(np.zeros(0), True, 0)
    if lam < 0:
        raise ValueOutOfRange("lambda must be non-negative")
    if cfg.center:
        X = X - X.mean(axis=0)
        y = y - y.mean()
    G = X.T @ X / n
    c = X.T @ y / n
    theta = np.zeros(m)
    sweeps, conv = _cd(G, np.arange(m, dtype=np.int64), c, float(lam), cfg.tol, cfg.max_iter, theta)
    if not conv:
        warnings.warn(f"lasso did not converge in {cfg.max_iter} sweeps", RuntimeWarning)
    return LassoFit(theta, bool(conv), int(sweeps))


def restrict_predictors(
    i: int, ordering: Sequence[int] | CausalOrdering, influence: np.ndarray | InfluenceMatrix
) -> list[int]:
    """Influence-graph parents of ``i`` that precede it in ``ordering``."""
    seq = ordering.sequence if isinstance(ordering, CausalOrdering) else tuple(ordering)
    infl = influence.square() if isinstance(influence, InfluenceMatrix) else np.asarray(influence)
    try:
        pos = seq.index(i)
    except ValueError:
        raise NodeNotInOrdering(f"node {i} is not in the ordering") from None
    return [j for j in seq[:pos] if infl[j, i]]


@dataclass
class DagEstimate:
    """Sparse DAG estimate for one ordering.

    ``sources[k] -> targets[k]`` carries weight ``values[k]`` (gene indices).
    """

    ordering: CausalOrdering
    p: int
    sources: np.ndarray
    targets: np.ndarray
    values: np.ndarray
    score: float
    mse: np.ndarray = field(repr=False)
    l1: np.ndarray = field(repr=False)
    lambdas: np.ndarray = field(repr=False)
    converged: bool = True
    labels: list[str] | None = field(default=None, repr=False)

    @property
    def edge_count(self) -> int:
        return int(self.values.shape[0])

    def weights(self) -> np.ndarray:
        W = np.zeros((self.p, self.p))
        W[self.sources, self.targets] = self.values
        return W

    def node_objectives(self) -> np.ndarray:
        """Attained objective per gene, indexed by gene."""
        out = np.empty(self.p)
        seq = np.asarray(self.ordering.sequence)
        out[seq] = self.mse + self.lambdas * self.l1
        return out


def _gram(values: np.ndarray, cfg: LassoConfig) -> np.ndarray:
    X = np.asarray(values, dtype=float)
    if cfg.center:
        X = X - X.mean(axis=0)
    if cfg.scale:
        sd = np.sqrt((X**2).mean(axis=0))
        X = X / np.where(sd > 0, sd, 1.0)
    return np.ascontiguousarray(X.T @ X / X.shape[0])


class OrderingEstimator:
    """Shared, read-only state for estimating many orderings on one dataset.

    Parameters
    ----------
    expr : ExpressionDataset or array
        Steady-state samples (rows) by genes (columns).
    influence : InfluenceMatrix or array
        Either a k x p influence matrix or a p x p boolean matrix.
    cfg : LassoConfig
    tf_ids : sequence of int, optional
        Perturbed genes for the two-layer setting.  Orderings then permute
        only these genes; the remaining genes are appended in index order and
        regressed on their influence parents once, independently of the
        ordering.
    """

    def __init__(self, expr, influence, cfg: LassoConfig = LassoConfig(), tf_ids=None):
        values = expr.values if isinstance(expr, ExpressionDataset) else np.asarray(expr, float)
        self.labels = list(expr.gene_labels) if isinstance(expr, ExpressionDataset) else None
        self.n, self.p = values.shape
        if isinstance(influence, InfluenceMatrix):
            if influence.p != self.p:
                raise GeneSetMismatch("influence matrix and expression data differ in gene count")
            if self.labels is not None and list(influence.gene_labels) != self.labels:
                raise GeneSetMismatch("influence matrix and expression data use different genes")
            infl = influence.square()
            if tf_ids is None and influence.k < influence.p:
                tf_ids = influence.perturbed_ids
        else:
            infl = np.asarray(influence).astype(bool)
            if infl.shape != (self.p, self.p):
                raise GeneSetMismatch("influence matrix must be p x p")
        self.cfg = cfg
        self.S = _gram(values, cfg)
        self.infl = np.ascontiguousarray(infl.copy())
        np.fill_diagonal(self.infl, False)
        self.lam = lambda_vector(self.n, self.p, cfg)
        self.tf_ids = None if tf_ids is None else [int(t) for t in tf_ids]
        self._tail = None
        if self.tf_ids is not None:
            tf = set(self.tf_ids)
            if len(tf) != len(self.tf_ids):
                raise LengthMismatch("duplicate transcription factors")
            self.rest = [g for g in range(self.p) if g not in tf]
            # non-perturbed genes have no outgoing influence edges
            self.infl[self.rest] = False

    @property
    def k(self) -> int:
        return self.p if self.tf_ids is None else len(self.tf_ids)

    def _full_sequence(self, ordering) -> tuple[int, ...]:
        seq = tuple(int(v) for v in (ordering.sequence if isinstance(ordering, CausalOrdering) else ordering))
        if self.tf_ids is None:
            if len(seq) != self.p or sorted(seq) != list(range(self.p)):
                raise LengthMismatch("ordering must be a permutation of all genes")
            return seq
        if sorted(seq) != sorted(self.tf_ids):
            raise LengthMismatch("ordering must permute exactly the perturbed genes")
        return seq + tuple(self.rest)

    def _tail_fit(self, order: np.ndarray):
        if self._tail is None:
            k = len(self.tf_ids)
            self._tail = _fit_positions(
                self.S, self.infl, order, self.lam, k, self.p, self.cfg.tol, self.cfg.max_iter
            )
        return self._tail

    def fit(self, ordering) -> DagEstimate:
        if not isinstance(ordering, CausalOrdering):
            ordering = CausalOrdering(tuple(int(v) for v in ordering))
        seq = self._full_sequence(ordering)
        order = np.asarray(seq, dtype=np.int64)
        cfg = self.cfg
        if self.tf_ids is None:
            src, tgt, val, mse, l1, ok = _fit_positions(
                self.S, self.infl, order, self.lam, 0, self.p, cfg.tol, cfg.max_iter
            )
        else:
            k = len(self.tf_ids)
            s1, t1, v1, m1, l1a, ok1 = _fit_positions(
                self.S, self.infl, order, self.lam, 0, k, cfg.tol, cfg.max_iter
            )
            s2, t2, v2, m2, l1b, ok2 = self._tail_fit(order)
            src, tgt, val = np.concatenate([s1, s2]), np.concatenate([t1, t2]), np.concatenate([v1, v2])
            mse, l1, ok = np.concatenate([m1, m2]), np.concatenate([l1a, l1b]), np.concatenate([ok1, ok2])
        converged = bool(ok.all())
        if not converged:
            warnings.warn("some lasso regressions hit the sweep limit", RuntimeWarning)
        score = _score(mse, l1, self.lam, self.n, cfg.score)
        return DagEstimate(
            CausalOrdering(seq, ordering.source, ordering.tag),
            self.p, src, tgt, val, score, mse, l1, self.lam.copy(), converged, self.labels,
        )

    def fit_many(self, orderings: Sequence, workers: int = 1) -> list[DagEstimate]:
        """Estimate every ordering; output order matches input order for any worker count."""
        orderings = list(orderings)
        if self.tf_ids is not None and orderings:
            # warm the shared ordering-independent part before threads start
            self._tail_fit(np.asarray(self._full_sequence(orderings[0]), dtype=np.int64))
        if workers <= 1 or len(orderings) < 2:
            return [self.fit(o) for o in orderings]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.fit, orderings))


def _score(mse, l1, lam, n, kind) -> float:
    penalty = float(np.dot(lam, l1))
    if kind == SCORE_PROFILE:
        return float(0.5 * n * np.sum(np.log(np.maximum(mse, 1e-300)))) + penalty
    return float(np.sum(mse)) + penalty


def estimate_dag_for_ordering(expr, ordering, influence, cfg: LassoConfig = LassoConfig()) -> DagEstimate:
    return OrderingEstimator(expr, influence, cfg).fit(ordering)


def estimate_two_layer(
    expr, tf_ids: Sequence[int], orderings: Sequence, influence, cfg: LassoConfig = LassoConfig(),
    workers: int = 1,
) -> list[DagEstimate]:
    """Two-layer estimation: orderings over the perturbed genes only.

    ``influence`` may be a k x p :class:`InfluenceMatrix` whose rows are the
    perturbed genes, or a p x p boolean matrix.
    """
    est = OrderingEstimator(expr, influence, cfg, tf_ids=tf_ids)
    return est.fit_many(orderings, workers)
