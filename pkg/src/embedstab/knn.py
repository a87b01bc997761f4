"""Pairwise distances and deterministic k-nearest-neighbor graphs.

Neighbor lists are sorted by ascending distance with ties broken by
ascending point index, so graphs are a pure function of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from .dataset import DataMatrix
from .errors import DataFormatError

METRICS = ("euclidean", "manhattan", "cosine")
_PDIST_NAME = {"euclidean": "euclidean", "manhattan": "cityblock", "cosine": "cosine"}


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric n-by-n distance matrix under a named metric."""

    values: np.ndarray
    metric: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class KnnGraph:
    """Ordered k-nearest-neighbor lists (0-based indices) for n points."""

    neighbors: np.ndarray  # (n, k) int
    k: int
    metric: str = "euclidean"
    distances: np.ndarray | None = None  # (n, k), when built from a DistanceMatrix

    def __post_init__(self):
        nb = np.asarray(self.neighbors, dtype=np.intp)
        if nb.ndim != 2 or nb.shape[1] != self.k:
            raise DataFormatError(f"neighbor lists must be n x k with k={self.k}")
        n = nb.shape[0]
        if (nb < 0).any() or (nb >= n).any():
            raise DataFormatError("neighbor indices out of range")
        if (nb == np.arange(n)[:, None]).any():
            raise DataFormatError("a neighbor list contains its own point")
        object.__setattr__(self, "neighbors", nb)

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    def neighbor_sets(self) -> list[set]:
        return [set(row.tolist()) for row in self.neighbors]


def pairwise_distances(X: DataMatrix | np.ndarray, metric: str = "euclidean") -> DistanceMatrix:
    """Exact symmetric pairwise distances under euclidean, manhattan, or cosine."""
    v = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    if metric == "cosine":
        norms = np.linalg.norm(v, axis=1)
        bad = np.nonzero(norms == 0)[0]
        if bad.size:
            raise DataFormatError(f"cosine distance undefined for zero-norm row {bad[0]}")
    d = squareform(pdist(v, _PDIST_NAME[metric]))
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d, metric)


def knn_graph(D: DistanceMatrix, k: int) -> KnnGraph:
    """k nearest neighbors per point from a distance matrix (self excluded)."""
    n = D.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    d = D.values
    neighbors = np.empty((n, k), dtype=np.intp)
    dists = np.empty((n, k))
    for i in range(n):
        order = np.argsort(d[i], kind="stable")
        order = order[order != i][:k]
        neighbors[i] = order
        dists[i] = d[i, order]
    return KnnGraph(neighbors, k=k, metric=D.metric, distances=dists)


def knn_graph_from_points(
    X: DataMatrix | np.ndarray, k: int, metric: str = "euclidean", method: str = "brute"
) -> KnnGraph:
    """Build a k-NN graph from points directly.

    ``method="brute"`` is the reference path; ``method="kdtree"`` (euclidean
    only) must produce an identical graph and falls back to brute force for
    rows with detected distance ties at the cut boundary.
    """
    v = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    if method == "brute" or metric != "euclidean":
        return knn_graph(pairwise_distances(v, metric), k)
    if method != "kdtree":
        raise ValueError(f"unknown method {method!r}")
    n = v.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    tree = cKDTree(v)
    m = min(n, k + 2)
    qd, qi = tree.query(v, k=m)
    neighbors = np.empty((n, k), dtype=np.intp)
    dists = np.empty((n, k))
    fallback = []
    for i in range(n):
        di, ii = qd[i], qi[i]
        keep = ii != i
        if keep.all():
            fallback.append(i)  # self missing from query results (duplicate pile-up)
            continue
        di, ii = di[keep], ii[keep]
        order = np.lexsort((ii, di))
        di, ii = di[order], ii[order]
        # a tie straddling the k-th position needs exact re-examination
        if len(di) > k and di[k - 1] == di[k]:
            fallback.append(i)
            continue
        neighbors[i] = ii[:k]
        dists[i] = di[:k]
    if fallback:
        dfull = squareform(pdist(v))
        for i in fallback:
            order = np.argsort(dfull[i], kind="stable")
            order = order[order != i][:k]
            neighbors[i] = order
            dists[i] = dfull[i, order]
    return KnnGraph(neighbors, k=k, metric=metric, distances=dists)


def export_edge_list(G: KnnGraph) -> list[tuple[int, int, int, float]]:
    """Rows (point, rank, neighbor, distance) for CSV debugging dumps."""
    rows = []
    for i in range(G.n):
        for r in range(G.k):
            d = float(G.distances[i, r]) if G.distances is not None else float("nan")
            rows.append((i, r + 1, int(G.neighbors[i, r]), d))
    return rows
