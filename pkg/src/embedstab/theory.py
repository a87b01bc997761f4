"""Empirical distortion analysis of circle embeddings.

Measures bilipschitz distortion statistics of embeddings, builds the
piecewise-rigid reference embedding that preserves each circular arc
exactly while separating arcs onto a magnified polygon, counts
fragmentation via epsilon-graph connected components, and runs the
distortion-versus-sample-size scaling experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .dataset import DataMatrix, discrete_circle
from .embed import OptimizerParams, random_init, tsne_affinities_knn, tsne_optimize
from .errors import DataFormatError
from .knn import KnnGraph, knn_graph, pairwise_distances


@dataclass(frozen=True)
class DistortionResult:
    """Min/max distance-ratio statistics of a point map."""

    scale_S: float
    distortion_L: float
    argmin_pair: tuple[int, int]
    argmax_pair: tuple[int, int]


def _coords(X) -> np.ndarray:
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def distortion(X, Y) -> DistortionResult:
    """Distance ratios ||y_i - y_j|| / ||x_i - x_j|| over all pairs.

    scale_S is the minimum ratio and distortion_L the max/min ratio, the
    empirical analogs of the bilipschitz scale and distortion constants.
    """
    xv, yv = _coords(X), _coords(Y)
    n = xv.shape[0]
    if n < 2 or yv.shape[0] != n:
        raise DataFormatError("need matching point sets with n >= 2")
    dx, dy = pdist(xv), pdist(yv)
    zero = np.nonzero(dx == 0)[0]
    if zero.size:
        i, j = _condensed_to_pair(zero[0], n)
        raise ValueError(f"coincident input points {i} and {j}: ratio undefined")
    r = dy / dx
    lo, hi = int(np.argmin(r)), int(np.argmax(r))
    s = float(r[lo])
    return DistortionResult(
        scale_S=s,
        distortion_L=float(r[hi] / s),
        argmin_pair=_condensed_to_pair(lo, n),
        argmax_pair=_condensed_to_pair(hi, n),
    )


def _condensed_to_pair(idx: int, n: int) -> tuple[int, int]:
    i = 0
    block = n - 1
    while idx >= block:
        idx -= block
        i += 1
        block -= 1
    return (i, i + idx + 1)


@dataclass(frozen=True)
class Phi0Embedding:
    """Arc-preserving reference embedding of the discrete circle.

    The circle is cut into M equal arcs; each arc is straightened
    (arclength preserved) onto the edge of an M-gon magnified by M, then
    everything is scaled by S0. Distances within an arc equal S0 times the
    original arc distances exactly; distances across arcs stay within
    [c*S0, S0/c] for the reported empirical constant c.
    """

    coords: np.ndarray
    M: int
    S0: float
    segment_of: np.ndarray
    empirical_c: float


def phi0_construction(n: int, M: int, S0: float = 1.0) -> Phi0Embedding:
    if M < 3:
        raise ValueError(f"M must be >= 3, got {M}")
    if n % M != 0:
        raise ValueError(f"M={M} must divide n={n}")
    if S0 <= 0:
        raise ValueError("S0 must be > 0")
    theta = 2.0 * math.pi * np.arange(1, n + 1) / n
    # blocks of n/M consecutive points centered on the vertex angles 2*pi*m/M,
    # so the M-gon has one vertex at angle 0
    half = n // (2 * M)
    shifted = np.floor((np.arange(1, n + 1) + half) * M / n).astype(int) % M
    segment = shifted
    verts = np.column_stack(
        [M * np.cos(2.0 * math.pi * np.arange(M) / M), M * np.sin(2.0 * math.pi * np.arange(M) / M)]
    )
    coords = np.empty((n, 2))
    for m in range(M):
        sel = segment == m
        center = 2.0 * math.pi * m / M
        # signed arclength offset from the arc midpoint, wrapped to (-pi, pi]
        rel = np.mod(theta[sel] - center + math.pi, 2.0 * math.pi) - math.pi
        a, b = verts[m], verts[(m + 1) % M]
        edge_dir = (b - a) / np.linalg.norm(b - a)
        mid = 0.5 * (a + b)
        coords[sel] = mid[None, :] + rel[:, None] * edge_dir[None, :]
    coords *= S0
    c = _empirical_separation(coords, segment, S0)
    return Phi0Embedding(coords=coords, M=M, S0=float(S0), segment_of=segment, empirical_c=c)


def _empirical_separation(coords: np.ndarray, segment: np.ndarray, S0: float) -> float:
    d = squareform(pdist(coords))
    cross = segment[:, None] != segment[None, :]
    ratios = d[cross] / S0
    return float(min(ratios.min(), 1.0 / ratios.max()))


def objective_knn(Y, G: KnnGraph) -> float:
    """Sum of log q_ij over ordered symmetrized-neighbor pairs."""
    yv = _coords(Y)
    n = yv.shape[0]
    if G.n != n:
        raise DataFormatError("graph and coordinates disagree on n")
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), G.k), G.neighbors.ravel()] = True
    adj |= adj.T
    d2 = squareform(pdist(yv)) ** 2
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    z = w.sum()
    return float(np.log(w[adj]).sum() - adj.sum() * math.log(z))


def objective_knn_gradient(Y, G: KnnGraph) -> np.ndarray:
    """Analytic gradient of objective_knn with respect to the coordinates."""
    yv = _coords(Y)
    n = yv.shape[0]
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), G.k), G.neighbors.ravel()] = True
    adj |= adj.T
    d2 = squareform(pdist(yv)) ** 2
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    z = w.sum()
    e = adj.sum()
    m = (adj - (e / z) * w) * w
    diff = m.sum(axis=1)[:, None] * yv - m @ yv
    return -4.0 * diff


def tune_phi0_scale(n: int, M: int, G: KnnGraph, grid=None) -> tuple[float, float]:
    """Scale factor on a log grid maximizing objective_knn of the reference map."""
    if grid is None:
        grid = np.geomspace(0.05, 200.0, 60)
    best_s, best_c = None, -math.inf
    for s0 in grid:
        c = objective_knn(phi0_construction(n, M, s0).coords, G)
        if c > best_c:
            best_s, best_c = float(s0), c
    return best_s, best_c


def circle_adjacent_pairs(X) -> np.ndarray:
    """Index pairs adjacent in angular order around the circle (wrapping)."""
    v = _coords(X)
    order = np.argsort(np.arctan2(v[:, 1], v[:, 0]), kind="stable")
    return np.column_stack([order, np.roll(order, -1)])


def epsilon_components(Y, eps: float) -> int:
    """Connected components of the graph linking points within distance eps."""
    yv = _coords(Y)
    adj = squareform(pdist(yv)) <= eps
    ncomp, _ = connected_components(adj, directed=False)
    return int(ncomp)


def fragmentation_components(X, Y, factor: float = 3.0) -> int:
    """Components of the epsilon-graph on the embedding, with epsilon set to
    ``factor`` times the median embedded distance between circle-adjacent pairs."""
    yv = _coords(Y)
    pairs = circle_adjacent_pairs(X)
    adj_d = np.linalg.norm(yv[pairs[:, 0]] - yv[pairs[:, 1]], axis=1)
    return epsilon_components(yv, factor * float(np.median(adj_d)))


@dataclass(frozen=True)
class ScalingRunRecord:
    n: int
    seed: int
    k: int
    L: float
    S: float
    components: int
    objective: float


@dataclass(frozen=True)
class ScalingSummaryRow:
    n: int
    median_L: float
    median_S: float
    median_components: float


def distortion_scaling_experiment(
    ns,
    k: int = 3,
    seeds_per_n: int = 10,
    base_seed: int = 0,
    params: OptimizerParams = OptimizerParams(),
    k_of_n=None,
) -> tuple[list[ScalingRunRecord], list[ScalingSummaryRow]]:
    """Embed discrete circles of growing size and record distortion statistics.

    For each n the circle is embedded ``seeds_per_n`` times from random
    initializations using the k-NN-affinity engine; per-run distortion L,
    scale S, epsilon-graph component count, and final objective are
    recorded, and per-n medians are summarized. ``k_of_n`` overrides the
    fixed k with a per-n neighbor count (for the high-connectivity control).
    """
    records: list[ScalingRunRecord] = []
    summary: list[ScalingSummaryRow] = []
    for n in ns:
        X = discrete_circle(n)
        kk = int(k_of_n(n)) if k_of_n is not None else int(k)
        P = tsne_affinities_knn(knn_graph(pairwise_distances(X), kk))
        ls, ss, cs = [], [], []
        for s in range(seeds_per_n):
            seed = base_seed + s
            run = tsne_optimize(P, random_init(n, seed, params.init_scale), params,
                                engine="tsne-knn", gcp=kk, seed=seed)
            dist = distortion(X, run.coords)
            comp = fragmentation_components(X, run.coords)
            records.append(
                ScalingRunRecord(n=n, seed=seed, k=kk, L=dist.distortion_L,
                                 S=dist.scale_S, components=comp,
                                 objective=run.final_objective)
            )
            ls.append(dist.distortion_L)
            ss.append(dist.scale_S)
            cs.append(comp)
        summary.append(
            ScalingSummaryRow(n=n, median_L=float(np.median(ls)),
                              median_S=float(np.median(ss)),
                              median_components=float(np.median(cs)))
        )
    return records, summary
