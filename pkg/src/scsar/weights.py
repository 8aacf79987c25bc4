"""
Binary symmetric contiguity weights.

W is kept as a list of unordered edges ``i < j`` plus a sparse CSR view.
Weights are never row-standardised, so the admissible range of a spatial
autoregressive parameter is ``(1/lambda_min, 1/lambda_max)`` taken from the
spectrum of the 0/1 matrix.
"""

from __future__ import annotations

import threading
import warnings
from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .errors import (
    DegenerateCoordinates,
    DuplicateUnitId,
    EmptySubset,
    IndexOutOfRange,
    KTooLarge,
    SelfLoop,
    UnknownUnitId,
)

__all__ = [
    "UnitIndexMap",
    "SpatialWeights",
    "weights_from_adjacency_list",
    "weights_from_knn",
    "weights_from_edges",
    "lattice_weights",
    "read_adjacency",
    "write_adjacency",
    "restrict",
    "spectrum",
]


class UnitIndexMap:
    """Ordered external unit ids with inverse lookup."""

    def __init__(self, ids: Sequence[str]):
        self.ids = [str(i) for i in ids]
        self.position = {uid: pos for pos, uid in enumerate(self.ids)}
        if len(self.position) != len(self.ids):
            dup = next(u for u, c in Counter(self.ids).items() if c > 1)
            raise DuplicateUnitId(f"duplicate unit id {dup!r}")

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, uid):
        return self.position[str(uid)]

    def __contains__(self, uid):
        return str(uid) in self.position

    def __eq__(self, other):
        return isinstance(other, UnitIndexMap) and self.ids == other.ids

    def __repr__(self):
        return f"UnitIndexMap(n={len(self.ids)})"


class SpatialWeights:
    """
    Symmetric binary weights over ``n`` units.

    Parameters
    ----------
    n : int
        Number of units.
    edges : array-like of shape (m, 2)
        Unordered pairs of distinct 0-based unit indices. Duplicates and
        reversed pairs are collapsed.
    """

    def __init__(self, n: int, edges=()):
        self.n = int(n)
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size:
            if np.any(e[:, 0] == e[:, 1]):
                i = int(e[e[:, 0] == e[:, 1]][0, 0])
                raise SelfLoop(f"self pair ({i}, {i})")
            if e.min() < 0 or e.max() >= self.n:
                raise IndexOutOfRange(f"edge index outside 0..{self.n - 1}")
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
        self.edges = e
        self.edges.setflags(write=False)
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        self.sparse = sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        self.sparse.sort_indices()
        self._eigenvalues = None
        self._lock = threading.Lock()

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def eigenvalues(self):
        return self._eigenvalues

    def dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def neighbors(self, i: int) -> np.ndarray:
        s = self.sparse
        return s.indices[s.indptr[i] : s.indptr[i + 1]]

    def degree(self) -> np.ndarray:
        return np.diff(self.sparse.indptr)

    def lag(self, v: np.ndarray) -> np.ndarray:
        """Return ``W @ v`` for a vector or matrix ``v``."""
        return self.sparse @ v

    def edge_set(self) -> set:
        return {(int(a), int(b)) for a, b in self.edges}

    def __eq__(self, other):
        return (
            isinstance(other, SpatialWeights)
            and self.n == other.n
            and np.array_equal(self.edges, other.edges)
        )

    def __repr__(self):
        return f"SpatialWeights(n={self.n}, edges={self.n_edges})"


def weights_from_edges(n: int, edges) -> SpatialWeights:
    return SpatialWeights(n, edges)


def weights_from_adjacency_list(pairs: Iterable, ids: Sequence) -> SpatialWeights:
    """Build weights from pairs of external ids, ordered by ``ids``."""
    index = ids if isinstance(ids, UnitIndexMap) else UnitIndexMap(ids)
    edges = []
    for a, b in pairs:
        a, b = str(a), str(b)
        for u in (a, b):
            if u not in index:
                raise UnknownUnitId(f"unit id {u!r} is not in the dataset")
        if a == b:
            raise SelfLoop(f"self pair ({a}, {a})")
        edges.append((index[a], index[b]))
    return SpatialWeights(len(index), edges)


def weights_from_knn(coords, k: int) -> SpatialWeights:
    """
    Symmetrised k-nearest-neighbour weights on planar coordinates.

    An edge joins i and j when either is among the other's ``k`` nearest
    units. Distance ties are broken by index order.
    """
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if k < 1 or k >= n:
        raise KTooLarge(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates must be finite")
    d = cdist(coords, coords)
    off = d + np.diag(np.full(n, np.inf))
    if np.any(off == 0.0):
        warnings.warn(
            "coincident coordinates; nearest-neighbour ties resolved by index order",
            DegenerateCoordinates,
            stacklevel=2,
        )
    # stable sort keeps index order among equal distances
    order = np.argsort(off, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    return SpatialWeights(n, np.column_stack([rows, order.ravel()]))


def lattice_weights(rows: int, cols: int) -> SpatialWeights:
    """Rook contiguity on a ``rows x cols`` grid, row-major unit order."""
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    vert = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    return SpatialWeights(rows * cols, np.vstack([horiz, vert]))


def restrict(w: SpatialWeights, members) -> SpatialWeights:
    """Principal submatrix of ``w`` on ``members``, re-indexed in the given order."""
    members = np.asarray(members, dtype=np.int64).ravel()
    if members.size == 0:
        raise EmptySubset("cannot restrict weights to an empty subset")
    if members.min() < 0 or members.max() >= w.n:
        raise IndexOutOfRange("member index outside the weights")
    pos = np.full(w.n, -1, dtype=np.int64)
    pos[members] = np.arange(members.size)
    e = pos[w.edges]
    keep = (e[:, 0] >= 0) & (e[:, 1] >= 0)
    return SpatialWeights(members.size, e[keep])


def spectrum(w: SpatialWeights) -> np.ndarray:
    """Ascending eigenvalues of the 0/1 matrix, cached on ``w``."""
    if w._eigenvalues is None:
        with w._lock:
            if w._eigenvalues is None:
                if w.n_edges == 0:
                    ev = np.zeros(w.n)
                else:
                    ev = np.linalg.eigvalsh(w.dense())
                ev.setflags(write=False)
                w._eigenvalues = ev
    return w._eigenvalues


def read_adjacency(path) -> list[tuple[str, str]]:
    """Read a whitespace-separated edge list; ``#`` lines are comments."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two unit ids, got {line!r}")
            pairs.append((parts[0], parts[1]))
    return pairs


def write_adjacency(path, w: SpatialWeights, ids: Sequence[str]):
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in w.edges:
            fh.write(f"{ids[a]} {ids[b]}\n")
