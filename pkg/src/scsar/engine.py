"""
Alternating estimation of cluster memberships and per-cluster spatial fits.

Step A fits the configured family on every cluster with the weights
restricted to that cluster. Step B reassigns each unit to the cluster that
maximises its own likelihood share plus ``phi`` times the number of
neighbours already in that cluster (a Potts-type reward for spatial
agreement). The penalised objective is

    Q = sum_k loglik_k + phi * #{edges (i, j) : label_i == label_j}.

Labels are 0-based internally; reports use 1-based cluster numbers.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset
from .errors import ClusterRepair, ClusterTooSmall, InvalidConfig, KExceedsN
from .likelihood import ClusterFit, Family, fit, min_units, unit_logliks
from .weights import SpatialWeights, restrict

__all__ = [
    "ClusterAssignment",
    "EngineConfig",
    "FitResult",
    "initialize",
    "penalty_gain",
    "potts_agreement",
    "membership_objective",
    "step_a",
    "step_b",
    "run",
]

log = logging.getLogger(__name__)


@dataclass(eq=False)
class ClusterAssignment:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError(f"labels must lie in 0..{self.k - 1}")

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def __eq__(self, other):
        return (
            isinstance(other, ClusterAssignment)
            and self.k == other.k
            and np.array_equal(self.labels, other.labels)
        )


@dataclass
class EngineConfig:
    family: Family = Family.SAR
    k: int = 3
    phi: float = 0.5
    max_itr: int = 100
    eta: float = 1e-6
    seed: int = 0
    min_cluster_size: int | None = None
    # False evaluates the neighbour reward at the previous iteration's labels
    sequential: bool = True
    keep_intercept_lag: bool = False
    kmeans_restarts: int = 10
    kmeans_iter: int = 100

    def __post_init__(self):
        self.family = Family(self.family)
        if self.k < 1:
            raise InvalidConfig("k must be >= 1")
        if self.phi < 0:
            raise InvalidConfig("phi must be >= 0")
        if self.max_itr < 1:
            raise InvalidConfig("max_itr must be >= 1")
        if not self.eta > 0:
            raise InvalidConfig("eta must be > 0")

    def min_size(self, p: int) -> int:
        if self.min_cluster_size is not None:
            return self.min_cluster_size
        return min_units(self.family, p)


@dataclass(eq=False)
class FitResult:
    assignment: ClusterAssignment
    fits: list[ClusterFit]
    objective_trace: list[float]
    penalized_objective: float
    total_loglik: float
    iterations: int
    converged_by: str
    aic: float
    bic: float
    n: int
    config: EngineConfig
    decreases: list[int] = field(default_factory=list)
    repairs: int = 0

    @property
    def n_params(self) -> int:
        return sum(f.n_params for f in self.fits)

    @property
    def sizes(self) -> list[int]:
        return [int(s) for s in self.assignment.sizes]


# -- initialisation -------------------------------------------------------------


def _lloyd(coords, k, rng, max_iter):
    n = len(coords)
    centers = coords[rng.choice(n, size=k, replace=False)].copy()
    labels = None
    for _ in range(max_iter):
        d = cdist(coords, centers, "sqeuclidean")
        new = d.argmin(axis=1)
        counts = np.bincount(new, minlength=k)
        for j in np.flatnonzero(counts == 0):
            # reseed an empty cluster with the point farthest from its centre
            far = int(np.argmax(d[np.arange(n), new]))
            new[far] = j
            counts = np.bincount(new, minlength=k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([coords[labels == j].mean(axis=0) for j in range(k)])
    wcss = float(((coords - centers[labels]) ** 2).sum())
    return labels, wcss


def _canonical(labels, k):
    """Relabel clusters in order of first appearance."""
    _, first = np.unique(labels, return_index=True)
    order = np.unique(labels)[np.argsort(first)]
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(len(order))
    return remap[labels]


def initialize(dataset: Dataset, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 100):
    """k-means on the planar coordinates; best of ``restarts`` Lloyd runs."""
    n = dataset.n
    if k > n:
        raise KExceedsN(f"k={k} exceeds the number of units {n}")
    if k == 1:
        return ClusterAssignment(np.zeros(n, dtype=np.int64), 1)
    rng = np.random.default_rng(seed)
    best, best_wcss = None, np.inf
    for _ in range(restarts):
        labels, wcss = _lloyd(dataset.coords, k, rng, max_iter)
        if wcss < best_wcss:
            best, best_wcss = labels, wcss
    return ClusterAssignment(_canonical(best, k), k)


# -- penalty ------------------------------------------------------------------


def penalty_gain(w: SpatialWeights, labels, i: int, candidate: int) -> int:
    """Number of neighbours of ``i`` currently labelled ``candidate``."""
    labels = np.asarray(labels)
    return int(np.count_nonzero(labels[w.neighbors(i)] == candidate))


def potts_agreement(w: SpatialWeights, labels) -> int:
    """Edges whose endpoints share a label, each unordered pair counted once."""
    labels = np.asarray(labels)
    if w.n_edges == 0:
        return 0
    return int(np.count_nonzero(labels[w.edges[:, 0]] == labels[w.edges[:, 1]]))


def membership_objective(U: np.ndarray, w: SpatialWeights, labels, phi: float) -> float:
    """Penalised objective at fixed fits, from the ``N x K`` unit share matrix."""
    labels = np.asarray(labels)
    return float(U[np.arange(len(labels)), labels].sum()) + phi * potts_agreement(w, labels)


# -- steps --------------------------------------------------------------------


class _WeightsCache:
    def __init__(self, w):
        self.w = w
        self._store = {}

    def get(self, members):
        key = members.tobytes()
        wk = self._store.get(key)
        if wk is None:
            wk = self._store[key] = restrict(self.w, members)
        return wk


def step_a(dataset, w, assignment, config, cache=None, compute_se=False):
    """Fit the configured family on every cluster with restricted weights."""
    cache = cache or _WeightsCache(w)
    need = config.min_size(dataset.p)
    fits = []
    for k in range(assignment.k):
        m = assignment.members(k)
        if m.size < need:
            raise ClusterTooSmall(f"cluster {k + 1} has {m.size} units, {need} required")
        wk = cache.get(m)
        kw = {"keep_intercept_lag": config.keep_intercept_lag} if config.family is Family.SLX else {}
        fits.append(fit(config.family, dataset.y[m], dataset.X[m], wk, compute_se, **kw))
    return fits


def unit_share_matrix(dataset, w, fits) -> np.ndarray:
    """``U[i, k]``: likelihood share of unit ``i`` under cluster ``k``'s fit on the full W."""
    return np.column_stack([unit_logliks(f, dataset.y, dataset.X, w) for f in fits])


def step_b(dataset, w, fits, assignment, config, U=None, callback=None):
    """
    Sweep units in index order and move each to its best cluster.

    With ``config.sequential`` the neighbour reward sees moves made earlier in
    the same sweep, which makes every move non-decreasing for the objective
    at fixed fits. Ties keep the current label, then prefer the smaller one.
    ``callback(i, old, new, labels)`` is called after each accepted move.
    """
    if U is None:
        U = unit_share_matrix(dataset, w, fits)
    K = assignment.k
    prev = assignment.labels
    labels = prev.copy()
    phi = config.phi
    indptr, indices = w.sparse.indptr, w.sparse.indices
    for i in range(dataset.n):
        nb = indices[indptr[i] : indptr[i + 1]]
        src = labels if config.sequential else prev
        score = U[i] + phi * np.bincount(src[nb], minlength=K)
        cur = labels[i]
        top = score.max()
        new = cur if score[cur] >= top else int(np.argmax(score))
        if new != cur:
            labels[i] = new
            if callback is not None:
                callback(i, cur, new, labels)
    return ClusterAssignment(labels, K)


def _repair_by_likelihood(labels, K, need, U):
    labels = labels.copy()
    moved = 0
    sizes = np.bincount(labels, minlength=K)
    while sizes.min() < need:
        small = int(np.argmin(sizes))
        big = int(np.argmax(sizes))
        m = np.flatnonzero(labels == big)
        worst = m[np.argmin(U[m, big])]
        labels[worst] = small
        sizes[big] -= 1
        sizes[small] += 1
        moved += 1
    return labels, moved


def _repair_by_distance(labels, K, need, coords):
    labels = labels.copy()
    moved = 0
    sizes = np.bincount(labels, minlength=K)
    while sizes.min() < need:
        small = int(np.argmin(sizes))
        big = int(np.argmax(sizes))
        m = np.flatnonzero(labels == big)
        if sizes[small]:
            target = coords[labels == small].mean(axis=0)
            pick = m[np.argmin(((coords[m] - target) ** 2).sum(axis=1))]
        else:
            centre = coords[m].mean(axis=0)
            pick = m[np.argmax(((coords[m] - centre) ** 2).sum(axis=1))]
        labels[pick] = small
        sizes[big] -= 1
        sizes[small] += 1
        moved += 1
    return labels, moved


# -- driver -------------------------------------------------------------------


def _finish(dataset, w, assignment, config, cache, trace, iterations, converged_by, decreases, repairs):
    fits = step_a(dataset, w, assignment, config, cache, compute_se=True)
    total = float(sum(f.loglik for f in fits))
    q = float(total + config.phi * potts_agreement(w, assignment.labels))
    p_total = sum(f.n_params for f in fits)
    n = dataset.n
    return FitResult(
        assignment=assignment,
        fits=fits,
        objective_trace=trace,
        penalized_objective=q,
        total_loglik=total,
        iterations=iterations,
        converged_by=converged_by,
        aic=float(2.0 * p_total - 2.0 * total),
        bic=float(p_total * np.log(n) - 2.0 * total),
        n=n,
        config=config,
        decreases=decreases,
        repairs=repairs,
    )


def run(dataset: Dataset, w: SpatialWeights, config: EngineConfig) -> FitResult:
    """Initialise from coordinates, then alternate steps A and B to convergence."""
    if w.n != dataset.n:
        raise ValueError(f"weights cover {w.n} units, dataset has {dataset.n}")
    need = config.min_size(dataset.p)
    if config.k * need > dataset.n:
        raise InvalidConfig(
            f"{config.k} clusters of at least {need} units do not fit in {dataset.n} units"
        )
    cache = _WeightsCache(w)
    a = initialize(dataset, config.k, config.seed, config.kmeans_restarts, config.kmeans_iter)
    labels, repairs = _repair_by_distance(a.labels, config.k, need, dataset.coords)
    assignment = ClusterAssignment(labels, config.k)

    trace: list[float] = []
    decreases: list[int] = []
    prev_ll = None
    converged_by = "max_itr"
    iterations = 0
    for r in range(1, config.max_itr + 1):
        iterations = r
        fits = step_a(dataset, w, assignment, config, cache)
        ll = float(sum(f.loglik for f in fits))
        q = ll + config.phi * potts_agreement(w, assignment.labels)
        if trace and q < trace[-1]:
            decreases.append(r)
        trace.append(q)
        if prev_ll is not None:
            change = abs(ll - prev_ll) / abs(prev_ll) if prev_ll != 0 else abs(ll - prev_ll)
            if change <= config.eta:
                converged_by = "loglik_tol"
                break
        U = unit_share_matrix(dataset, w, fits)
        new = step_b(dataset, w, fits, assignment, config, U)
        labels, moved = _repair_by_likelihood(new.labels, config.k, need, U)
        if moved:
            repairs += moved
            warnings.warn(f"iteration {r}: moved {moved} unit(s) into undersized clusters", ClusterRepair, stacklevel=2)
        if np.array_equal(labels, assignment.labels):
            converged_by = "membership_fixed"
            break
        assignment = ClusterAssignment(labels, config.k)
        prev_ll = ll
    if decreases:
        log.info("penalised objective decreased at iterations %s", decreases)
    result = _finish(dataset, w, assignment, config, cache, trace, iterations, converged_by, decreases, repairs)
    if converged_by == "max_itr":
        # the last sweep moved units after the final step A; record the refit
        result.objective_trace.append(result.penalized_objective)
    return result
