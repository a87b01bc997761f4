"""Ensemble stability scoring for neighbor embeddings.

Runs an engine N times under random initialization, counts how often point
pairs co-occur as embedding-space k-nearest neighbors, and derives per-point
and global stability scores, per-run rareness scores, and an automated
connectivity-parameter recommendation.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import DataMatrix
from .embed import EmbeddingRun, OptimizerParams, prepare_affinities, random_init, tsne_optimize
from .errors import DataFormatError
from .knn import knn_graph, pairwise_distances

EPS_VARIANCE = 1e-12

EngineFn = Callable[[DataMatrix, float, int, OptimizerParams], EmbeddingRun]


@dataclass(frozen=True)
class RunEnsemble:
    """N embeddings of the same data under one engine and connectivity value."""

    runs: tuple
    seeds: tuple
    engine: str
    gcp: float

    def __post_init__(self):
        runs = tuple(self.runs)
        if len(runs) < 2:
            raise ValueError("an ensemble needs at least 2 runs")
        n = runs[0].n
        if any(r.n != n for r in runs):
            raise DataFormatError("all runs must embed the same number of points")
        object.__setattr__(self, "runs", runs)
        object.__setattr__(self, "seeds", tuple(self.seeds))

    @property
    def N(self) -> int:
        return len(self.runs)

    @property
    def n(self) -> int:
        return self.runs[0].n


@dataclass(frozen=True)
class NeighborCountMatrix:
    """Symmetrized co-neighbor counts across N runs at neighbor count k."""

    counts: np.ndarray
    N: int
    k: int

    @property
    def n(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class StabilityReport:
    local: np.ndarray
    global_score: float
    lam: float
    k: int
    N: int

    def to_dict(self) -> dict:
        return {
            "local": [float(s) for s in self.local],
            "global": self.global_score,
            "lambda": self.lam,
            "k": self.k,
            "N": self.N,
        }


@dataclass(frozen=True)
class RarenessReport:
    W: np.ndarray
    m: np.ndarray
    v: np.ndarray
    R: np.ndarray
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "W": self.W.tolist(),
            "m": self.m.tolist(),
            "v": self.v.tolist(),
            "R": self.R.tolist(),
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class GcpScanTrace:
    """Per-GCP global stability values and the recommended GCP."""

    entries: tuple  # of (gcp, gs, wall_time_seconds)
    recommended: float
    rule: str

    def to_dict(self, include_timings: bool = False) -> dict:
        entries = []
        for gcp, gs, wall in self.entries:
            e = {"gcp": gcp, "gs": gs}
            if include_timings:
                e["wall_time"] = wall
            entries.append(e)
        return {"entries": entries, "recommended": self.recommended, "rule": self.rule}


def _resolve_engine(engine: str | EngineFn) -> EngineFn:
    if callable(engine):
        return engine
    name = engine

    def run(X: DataMatrix, gcp: float, seed: int, params: OptimizerParams) -> EmbeddingRun:
        P = prepare_affinities(name, X, gcp)
        init = random_init(X.n, seed, params.init_scale)
        return tsne_optimize(P, init, params, engine=name, gcp=gcp, seed=seed)

    return run


def collect_runs(
    engine: str | EngineFn,
    X: DataMatrix,
    gcp: float,
    N: int = 30,
    base_seed: int = 0,
    params: OptimizerParams = OptimizerParams(),
    threads: int = 1,
) -> RunEnsemble:
    """Execute N runs with seeds base_seed .. base_seed+N-1.

    For the named engines the affinity matrix is computed once and shared;
    results are independent of ``threads``.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    seeds = [base_seed + i for i in range(N)]
    if callable(engine):
        fn = engine
        name = getattr(engine, "name", "custom")

        def one(seed: int) -> EmbeddingRun:
            return fn(X, gcp, seed, params)

    else:
        name = engine
        P = prepare_affinities(engine, X, gcp)

        def one(seed: int) -> EmbeddingRun:
            init = random_init(X.n, seed, params.init_scale)
            return tsne_optimize(P, init, params, engine=name, gcp=gcp, seed=seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(one, seeds))
    else:
        runs = [one(s) for s in seeds]
    return RunEnsemble(runs=tuple(runs), seeds=tuple(seeds), engine=name, gcp=gcp)


def embedding_knn_lists(ensemble: RunEnsemble, k: int) -> list[np.ndarray]:
    """Embedding-space k-NN index lists (euclidean) for every run."""
    n = ensemble.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    return [knn_graph(pairwise_distances(r.coords), k).neighbors for r in ensemble.runs]


def neighbor_counts_from_lists(lists: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Accumulate co-neighbor counts over runs, then max-symmetrize."""
    counts = np.zeros((n, n), dtype=np.int64)
    for nb in lists:
        k = nb.shape[1]
        counts[np.repeat(np.arange(n), k), np.asarray(nb).ravel()] += 1
    return np.maximum(counts, counts.T)


def neighbor_count_matrix(ensemble: RunEnsemble, k: int = 50) -> NeighborCountMatrix:
    lists = embedding_knn_lists(ensemble, k)
    counts = neighbor_counts_from_lists(lists, ensemble.n)
    return NeighborCountMatrix(counts=counts, N=ensemble.N, k=k)


def local_stability(K: NeighborCountMatrix, lam: float = 0.75) -> np.ndarray:
    """Per-point lambda-quantile of positive normalized co-neighbor counts.

    Uses the linear-interpolation quantile convention (numpy's default).
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    counts = K.counts
    scores = np.empty(counts.shape[0])
    for j in range(counts.shape[0]):
        pos = counts[j][counts[j] > 0]
        if pos.size == 0:
            raise DataFormatError(f"point {j} has no positive neighbor counts")
        scores[j] = np.quantile(pos / K.N, lam)
    return scores


def global_stability(S: np.ndarray) -> float:
    S = np.asarray(S, dtype=float)
    if S.size == 0:
        raise ValueError("empty score vector")
    return float(S.mean())


def stability_report(ensemble: RunEnsemble, k: int = 50, lam: float = 0.75) -> StabilityReport:
    K = neighbor_count_matrix(ensemble, k)
    S = local_stability(K, lam)
    return StabilityReport(local=S, global_score=global_stability(S), lam=lam, k=k, N=ensemble.N)


def instability(S: np.ndarray, transform: bool = False) -> np.ndarray:
    """Reciprocal stability, optionally rescaled as log(1 + 100*log(1/S))."""
    S = np.asarray(S, dtype=float)
    if (S <= 0).any() or (S > 1).any():
        raise ValueError("stability scores must lie in (0, 1]")
    raw = 1.0 / S
    if not transform:
        return raw
    return np.log1p(100.0 * np.log(raw))


def rareness_scores(ensemble: RunEnsemble, k: int = 50) -> RarenessReport:
    """Pairwise shared-neighbor similarity between runs and per-run rareness.

    W(i,j) is the median over points of the shared k-NN fraction between
    runs i and j; R_i = 1 / (m_i * v_i) with a small variance guard, where
    m_i and v_i are the mean and population variance of column i of W
    excluding the diagonal. A run sharing no neighbors with the others has
    m_i = 0 and an infinite rareness score.
    """
    if ensemble.N < 3:
        raise ValueError(f"rareness needs N >= 3 runs, got {ensemble.N}")
    n, N = ensemble.n, ensemble.N
    lists = embedding_knn_lists(ensemble, k)

    def incidence(nb: np.ndarray) -> np.ndarray:
        b = np.zeros((n, n), dtype=bool)
        b[np.repeat(np.arange(n), k), nb.ravel()] = True
        return b

    W = np.eye(N)
    for i in range(N):
        bi = incidence(lists[i])
        for j in range(i + 1, N):
            bj = incidence(lists[j])
            shared = (bi & bj).sum(axis=1)
            W[i, j] = W[j, i] = float(np.median(shared / k))
    off = ~np.eye(N, dtype=bool)
    m = np.array([W[:, i][off[:, i]].mean() for i in range(N)])
    v = np.array([W[:, i][off[:, i]].var() for i in range(N)])
    degenerate = bool((v < EPS_VARIANCE).all())
    with np.errstate(divide="ignore"):
        R = 1.0 / (m * np.maximum(v, EPS_VARIANCE))
    return RarenessReport(W=W, m=m, v=v, R=R, degenerate=degenerate)


def pick_typical_run(ensemble: RunEnsemble, k: int = 50) -> tuple[int, RarenessReport]:
    """Index of the lowest-rareness (most typical) run plus the full report."""
    report = rareness_scores(ensemble, k)
    return int(np.argmin(report.R)), report


def gcp_grid(n: int, num: int = 5, log_base: float = math.e, integer: bool = True) -> list[float]:
    """``num`` equally spaced connectivity values from 10 to round(10*log(n))."""
    top = 10.0 * math.log(n) / math.log(log_base)
    raw = np.linspace(10.0, round(top), num)
    if not integer:
        return [float(g) for g in raw]
    vals: list[float] = []
    for g in raw:
        r = float(math.floor(g + 0.5))
        if r not in vals:
            vals.append(r)
    return vals


def apply_sequential_rule(
    gcps: Sequence[float],
    scores: Sequence[float],
    gs_stop: float = 0.9,
    min_improvement: float = 0.05,
    absolute: bool = False,
) -> tuple[float, int]:
    """Early-stop recommendation: returns (recommended gcp, # entries used).

    Scanning in ascending order, stop once the current global stability
    exceeds ``gs_stop`` or fails to improve on the previous one by at least
    ``min_improvement`` (relative by default, absolute behind the flag).
    """
    last = 0
    for i, gs in enumerate(scores):
        last = i
        if gs > gs_stop:
            break
        if i > 0:
            prev = scores[i - 1]
            gain = (gs - prev) if absolute else (gs / prev - 1.0 if prev > 0 else math.inf)
            if gain < min_improvement:
                break
    return float(gcps[last]), last + 1


def apply_top5pct_rule(gcps: Sequence[float], scores: Sequence[float]) -> float:
    """Smallest gcp whose score reaches the 95th percentile of all scores."""
    thr = float(np.quantile(np.asarray(scores, dtype=float), 0.95))
    for g, s in zip(gcps, scores):
        if s >= thr:
            return float(g)
    return float(gcps[-1])


def gcp_scan(
    engine: str | EngineFn,
    X: DataMatrix,
    gcps: Sequence[float] | None = None,
    N: int = 30,
    k: int = 50,
    lam: float = 0.75,
    rule: str = "sequential",
    base_seed: int = 0,
    params: OptimizerParams = OptimizerParams(),
    threads: int = 1,
    absolute_improvement: bool = False,
) -> GcpScanTrace:
    """Evaluate global stability over a connectivity grid and recommend a value.

    ``rule="sequential"`` stops early per the stop rule and recommends the
    last evaluated gcp; ``rule="top5pct"`` scans the whole grid and
    recommends the smallest gcp in the top 5% of scores.
    """
    if gcps is None:
        gcps = gcp_grid(X.n)
    gcps = [float(g) for g in gcps]
    if not gcps or any(b <= a for a, b in zip(gcps, gcps[1:])):
        raise ValueError("gcps must be a nonempty strictly increasing sequence")
    if rule not in ("sequential", "top5pct"):
        raise ValueError(f"unknown rule {rule!r}")

    entries: list[tuple[float, float, float]] = []
    scores: list[float] = []
    for gcp in gcps:
        t0 = time.perf_counter()
        ens = collect_runs(engine, X, gcp, N=N, base_seed=base_seed, params=params, threads=threads)
        gs = stability_report(ens, k=k, lam=lam).global_score
        entries.append((gcp, gs, time.perf_counter() - t0))
        scores.append(gs)
        if rule == "sequential" and _sequential_stop(scores, absolute_improvement):
            break
    if rule == "sequential":
        recommended = float(gcps[len(scores) - 1])
    else:
        recommended = apply_top5pct_rule(gcps, scores)
    return GcpScanTrace(entries=tuple(entries), recommended=recommended, rule=rule)


def _sequential_stop(scores: Sequence[float], absolute: bool, gs_stop: float = 0.9, min_improvement: float = 0.05) -> bool:
    if scores[-1] > gs_stop:
        return True
    if len(scores) < 2:
        return False
    prev, cur = scores[-2], scores[-1]
    gain = (cur - prev) if absolute else (cur / prev - 1.0 if prev > 0 else math.inf)
    return gain < min_improvement
