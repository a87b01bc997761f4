"""Structure- and label-preservation metrics, density profiling, and the
unstable-point removal and feature-association analyses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.stats import spearmanr

from .dataset import DataMatrix, LabelVector
from .errors import DataFormatError
from .knn import knn_graph, pairwise_distances
from .stability import (
    OptimizerParams,
    RunEnsemble,
    collect_runs,
    stability_report,
)


@dataclass(frozen=True)
class MetricsReport:
    correlation: float
    concordance: float
    silhouette: float | None
    neighbor_purity: float | None
    local_simpson: float | None
    parameters: dict

    def to_dict(self) -> dict:
        out = {
            "correlation": self.correlation,
            "concordance": self.concordance,
            "parameters": dict(self.parameters),
        }
        if self.silhouette is not None:
            out["silhouette"] = self.silhouette
        if self.neighbor_purity is not None:
            out["neighbor_purity"] = self.neighbor_purity
        if self.local_simpson is not None:
            out["local_simpson"] = self.local_simpson
        return out


def _coords(X) -> np.ndarray:
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def correlation_score(X, Y) -> float:
    """Pearson correlation between input and embedding pairwise distances."""
    xv, yv = _coords(X), _coords(Y)
    if xv.shape[0] != yv.shape[0]:
        raise DataFormatError("X and Y must have the same number of points")
    if xv.shape[0] < 3:
        raise ValueError("need at least 3 points")
    dx, dy = pdist(xv), pdist(yv)
    if dx.std() == 0 or dy.std() == 0:
        raise ValueError("pairwise distances have zero variance; correlation undefined")
    return float(np.corrcoef(dx, dy)[0, 1])


def _knn_sets(v: np.ndarray, k: int) -> list[set]:
    return knn_graph(pairwise_distances(v), k).neighbor_sets()


def concordance(X, Y, k: int = 100) -> float:
    """Mean shared fraction of k-nearest-neighbor sets between X and Y."""
    xv, yv = _coords(X), _coords(Y)
    n = xv.shape[0]
    if yv.shape[0] != n:
        raise DataFormatError("X and Y must have the same number of points")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    high = _knn_sets(xv, k)
    low = _knn_sets(yv, k)
    return float(np.mean([len(h & l) / k for h, l in zip(high, low)]))


def _as_labels(labels) -> np.ndarray:
    if isinstance(labels, LabelVector):
        return labels.labels
    return np.asarray(labels)


def silhouette(Y, labels) -> float:
    """Mean silhouette width over points; singleton clusters contribute 0."""
    yv = _coords(Y)
    lab = _as_labels(labels)
    if lab.shape[0] != yv.shape[0]:
        raise DataFormatError("labels length must match the number of points")
    cats = sorted(set(lab.tolist()))
    if len(cats) < 2:
        raise ValueError("silhouette needs at least 2 categories")
    d = squareform(pdist(yv))
    masks = {c: lab == c for c in cats}
    sizes = {c: int(masks[c].sum()) for c in cats}
    s = np.zeros(yv.shape[0])
    for i in range(yv.shape[0]):
        own = lab[i]
        if sizes[own] == 1:
            continue
        a = d[i, masks[own]].sum() / (sizes[own] - 1)
        b = min(d[i, masks[c]].mean() for c in cats if c != own)
        s[i] = (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return float(s.mean())


def neighbor_purity(Y, labels, k: int = 50) -> float:
    """Mean fraction of same-label points among each point's embedding k-NN."""
    yv = _coords(Y)
    lab = _as_labels(labels)
    nb = knn_graph(pairwise_distances(yv), k).neighbors
    same = lab[nb] == lab[:, None]
    return float(same.mean())


def local_simpson(Y, labels, k: int = 50) -> float:
    """Mean of per-point sum of squared label proportions over k-NN (self excluded).

    A fixed-k simplification of the reciprocal local inverse Simpson index:
    1 means locally pure neighborhoods, 1/#categories means full mixing.
    """
    yv = _coords(Y)
    lab = _as_labels(labels)
    nb = knn_graph(pairwise_distances(yv), k).neighbors
    cats = sorted(set(lab.tolist()))
    scores = np.empty(yv.shape[0])
    for i in range(yv.shape[0]):
        neigh = lab[nb[i]]
        props = np.array([(neigh == c).mean() for c in cats])
        scores[i] = float((props**2).sum())
    return float(scores.mean())


def metrics_report(
    X,
    Y,
    labels=None,
    concordance_k: int = 100,
    purity_k: int = 50,
    simpson_k: int = 50,
) -> MetricsReport:
    params = {"concordance_k": concordance_k}
    sil = pur = sim = None
    if labels is not None:
        sil = silhouette(Y, labels)
        pur = neighbor_purity(Y, labels, purity_k)
        sim = local_simpson(Y, labels, simpson_k)
        params.update({"purity_k": purity_k, "simpson_k": simpson_k})
    return MetricsReport(
        correlation=correlation_score(X, Y),
        concordance=concordance(X, Y, concordance_k),
        silhouette=sil,
        neighbor_purity=pur,
        local_simpson=sim,
        parameters=params,
    )


def mean_knn_distances(X, k: int = 30) -> np.ndarray:
    """Per-point mean euclidean distance to its k nearest neighbors."""
    v = _coords(X)
    g = knn_graph(pairwise_distances(v), k)
    return g.distances.mean(axis=1)


def local_density_profile(
    X_reduced,
    S: np.ndarray,
    percentiles=(10, 25, 50, 75, 100),
    k: int = 30,
    normalization: str = "median-of-means",
) -> list[tuple[float, float]]:
    """Mean normalized k-NN distance among the top-p% most stable points.

    For each percentile p, the point set holds the p% of points with the
    highest stability score; growing p admits progressively less stable
    points. Per-point mean k-NN distances are normalized by their median
    over all points (default) or, behind the flag
    ``normalization="pooled-median"``, by the median of all point-to-
    neighbor distances pooled across points.
    """
    v = _coords(X_reduced)
    n = v.shape[0]
    if n <= k:
        raise ValueError(f"need more than {k} points, got {n}")
    S = np.asarray(S, dtype=float)
    if S.shape[0] != n:
        raise DataFormatError("stability vector length must match the data")
    g = knn_graph(pairwise_distances(v), k)
    means = g.distances.mean(axis=1)
    if normalization == "median-of-means":
        denom = float(np.median(means))
    elif normalization == "pooled-median":
        denom = float(np.median(g.distances))
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    if denom == 0:
        raise ValueError("degenerate data: median neighbor distance is zero")
    norm = means / denom
    out = []
    for p in percentiles:
        if not 0 < p <= 100:
            raise ValueError("percentiles must lie in (0, 100]")
        thr = np.quantile(S, 1.0 - p / 100.0)
        sel = S >= thr
        out.append((float(p), float(norm[sel].mean())))
    return out


@dataclass(frozen=True)
class RemovalRow:
    fraction: float
    d_gs_pct: float
    d_concordance_pct: float
    d_purity_pct: float | None


def removal_experiment(
    X: DataMatrix,
    ensemble: RunEnsemble,
    S: np.ndarray,
    fractions,
    labels=None,
    k: int = 50,
    lam: float = 0.75,
    concordance_k: int = 100,
    purity_k: int = 50,
    params: OptimizerParams = OptimizerParams(),
    threads: int = 1,
    min_points: int = 31,
) -> list[RemovalRow]:
    """Drop the lowest-stability fraction of points and re-run the pipeline.

    The retained subset is re-embedded with the ensemble's engine, GCP, and
    seeds (pass the params the ensemble was built with so the comparison is
    like-for-like); the table reports percent changes of global stability,
    ensemble-mean concordance, and (with labels) ensemble-mean neighbor
    purity relative to the given ensemble as the no-removal baseline.
    """
    S = np.asarray(S, dtype=float)
    n = X.n
    fractions = [float(q) for q in fractions]
    if any(q < 0 or q > 0.5 for q in fractions):
        raise ValueError("fractions must lie in [0, 0.5]")
    order = np.argsort(S, kind="stable")  # lowest stability first, ties by index
    all_labels = _as_labels(labels) if labels is not None else None

    def evaluate(ens: RunEnsemble, sub: DataMatrix, lab) -> tuple[float, float, float | None]:
        gs = stability_report(ens, k=k, lam=lam).global_score
        conc = float(np.mean([concordance(sub, r.coords, concordance_k) for r in ens.runs]))
        pur = None
        if lab is not None:
            pur = float(np.mean([neighbor_purity(r.coords, lab, purity_k) for r in ens.runs]))
        return gs, conc, pur

    def rerun(frac: float) -> tuple[float, float, float | None]:
        drop = int(round(frac * n))
        keep = np.sort(order[drop:])
        if keep.size < min_points:
            raise ValueError(f"fraction {frac} leaves {keep.size} points (< {min_points})")
        sub = DataMatrix(X.values[keep], labels=X.labels[keep] if X.labels is not None else None)
        ens = collect_runs(
            ensemble.engine, sub, ensemble.gcp, N=ensemble.N,
            base_seed=ensemble.seeds[0], params=params, threads=threads,
        )
        return evaluate(ens, sub, all_labels[keep] if all_labels is not None else None)

    base_gs, base_conc, base_pur = evaluate(ensemble, X, all_labels)
    rows = []
    for q in fractions:
        gs, conc, pur = (base_gs, base_conc, base_pur) if q == 0.0 else rerun(q)
        d_pur = None
        if pur is not None and base_pur:
            d_pur = 100.0 * (pur / base_pur - 1.0)
        rows.append(
            RemovalRow(
                fraction=q,
                d_gs_pct=100.0 * (gs / base_gs - 1.0),
                d_concordance_pct=100.0 * (conc / base_conc - 1.0),
                d_purity_pct=d_pur,
            )
        )
    return rows


def bh_adjust(p: np.ndarray) -> np.ndarray:
    """Benjamini-Hochberg adjusted p-values (monotone, >= raw, capped at 1)."""
    p = np.asarray(p, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    adj = np.empty(m)
    running = 1.0
    for rank in range(m, 0, -1):
        idx = order[rank - 1]
        running = min(running, p[idx] * m / rank)
        adj[idx] = running
    return adj


@dataclass(frozen=True)
class AssociationRow:
    feature: str
    rho: float
    p_value: float
    p_adjusted: float
    direction: int
    valid: bool


def feature_association(
    F: np.ndarray, S: np.ndarray, feature_names=None
) -> list[AssociationRow]:
    """Spearman association of each feature column with the stability scores.

    P-values use the t approximation with mid-ranks for ties; adjustment is
    Benjamini-Hochberg across the non-constant features. Constant features
    are flagged invalid and excluded from the adjustment family.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    S = np.asarray(S, dtype=float)
    if F.shape[0] != S.shape[0]:
        raise DataFormatError("feature matrix rows must match the stability vector")
    if np.all(S == S[0]):
        raise ValueError("stability scores are constant; association undefined")
    m = F.shape[1]
    names = [str(feature_names[j]) if feature_names is not None else f"f{j}" for j in range(m)]
    rho = np.full(m, np.nan)
    pval = np.full(m, np.nan)
    valid = np.zeros(m, dtype=bool)
    for j in range(m):
        col = F[:, j]
        if np.all(col == col[0]):
            continue
        r, p = spearmanr(col, S)
        rho[j], pval[j], valid[j] = float(r), float(p), True
    adj = np.full(m, np.nan)
    if valid.any():
        adj[valid] = bh_adjust(pval[valid])
    rows = []
    for j in range(m):
        direction = int(np.sign(rho[j])) if valid[j] else 0
        rows.append(
            AssociationRow(
                feature=names[j],
                rho=float(rho[j]),
                p_value=float(pval[j]),
                p_adjusted=float(adj[j]),
                direction=direction,
                valid=bool(valid[j]),
            )
        )
    return rows
