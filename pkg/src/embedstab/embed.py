"""Neighbor-embedding engines behind a common interface.

Two exact O(n^2) t-SNE variants are provided: classic perplexity-calibrated
Gaussian affinities, and uniform affinities on a symmetrized k-NN graph
where the neighbor count k plays the role of the graph-connectivity
hyperparameter. Both optimize the same Cauchy-kernel objective with
momentum gradient descent from a small random initialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DataMatrix
from .errors import DataFormatError, NumericError
from .knn import DistanceMatrix, KnnGraph, knn_graph, pairwise_distances
from .serialize import fmt_float, read_numeric_csv, write_json

ENGINES = ("tsne-perplexity", "tsne-knn")


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric input-space affinities summing to 1 over ordered pairs."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DataFormatError("affinities must be square")
        if not np.array_equal(v, v.T):
            raise DataFormatError("affinities must be symmetric")
        if (v < 0).any() or np.diagonal(v).any():
            raise DataFormatError("affinities must be non-negative with zero diagonal")
        total = v.sum()
        if abs(total - 1.0) > 1e-10:
            raise DataFormatError(f"affinities must sum to 1, got {total!r}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class OptimizerParams:
    """Momentum gradient-descent controls for the embedding optimizer."""

    iterations: int = 1000
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch: int = 250
    exaggeration: float = 12.0
    exaggeration_iters: int = 250
    init_scale: float = 1e-4

    def __post_init__(self):
        if self.iterations < 1 or self.learning_rate <= 0 or self.init_scale <= 0:
            raise ValueError("iterations, learning_rate, and init_scale must be positive")
        if not (0 <= self.momentum_early < 1 and 0 <= self.momentum_late < 1):
            raise ValueError("momentum values must lie in [0, 1)")
        if self.exaggeration < 1 or self.exaggeration_iters < 0:
            raise ValueError("exaggeration must be >= 1 with non-negative duration")
        # phase switches never extend past the run
        object.__setattr__(self, "momentum_switch", min(self.momentum_switch, self.iterations))
        object.__setattr__(self, "exaggeration_iters", min(self.exaggeration_iters, self.iterations))


@dataclass(frozen=True)
class EmbeddingRun:
    """One 2-D embedding with provenance and the final objective value."""

    coords: np.ndarray
    engine: str
    gcp: float
    seed: int
    final_objective: float
    iterations: int
    tail_objectives: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 2 or c.shape[1] != 2:
            raise DataFormatError("coords must be n x 2")
        if not np.isfinite(c).all():
            raise DataFormatError("coords contain non-finite values")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def meta(self) -> dict:
        return {
            "engine": self.engine,
            "gcp": self.gcp,
            "seed": self.seed,
            "final_objective": self.final_objective,
            "iterations": self.iterations,
        }


def _row_entropy_bits(d2: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    shift = d2.min()
    w = np.exp(-beta * (d2 - shift))
    sw = w.sum()
    p = w / sw
    h = math.log2(sw) + beta * float(p @ (d2 - shift)) / math.log(2.0)
    return h, p

def tsne_affinities_perplexity(
    D: DistanceMatrix, perplexity: float, tol: float = 1e-7, max_iter: int = 200
) -> AffinityMatrix:
    """Perplexity-calibrated Gaussian affinities, symmetrized to sum to 1.

    Each row's bandwidth is found by binary search so the base-2 entropy of
    the conditional distribution matches log2(perplexity) within ``tol``.
    """
    n = D.n
    if not 1.0 < perplexity < n:
        raise ValueError(f"perplexity must lie in (1, n={n}), got {perplexity}")
    target = math.log2(perplexity)
    d2 = D.values**2
    cond = np.zeros((n, n))
    for i in range(n):
        others = np.arange(n) != i
        row = d2[i, others]
        beta, lo, hi = 1.0, 0.0, math.inf
        p = None
        for _ in range(max_iter):
            h, p = _row_entropy_bits(row, beta)
            if abs(h - target) <= tol:
                break
            if h > target:  # too flat: tighten the kernel
                lo = beta
                beta = beta * 2.0 if hi == math.inf else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = 0.5 * (lo + hi)
        else:
            raise NumericError(f"perplexity calibration did not converge for row {i}")
        cond[i, others] = p
    return AffinityMatrix((cond + cond.T) / (2.0 * n), kind="perplexity")


def tsne_affinities_knn(G: KnnGraph) -> AffinityMatrix:
    """Uniform affinities on the OR-symmetrized k-NN relation, renormalized to 1."""
    n, k = G.n, G.k
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), G.neighbors.ravel()] = True
    adj |= adj.T
    p = adj / (2.0 * n * k)
    p /= p.sum()
    return AffinityMatrix(p, kind="knn-uniform")


def random_init(n: int, seed: int, init_scale: float = 1e-4) -> np.ndarray:
    """Gaussian starting coordinates with standard deviation ``init_scale``."""
    if init_scale <= 0:
        raise ValueError("init_scale must be > 0")
    rng = np.random.default_rng(seed)
    return init_scale * rng.standard_normal((n, 2))


def _pair_weights(Y: np.ndarray) -> np.ndarray:
    sq = (Y * Y).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Y @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    return w


def objective(P: AffinityMatrix | np.ndarray, Y: np.ndarray) -> float:
    """Sum of p_ij * log(q_ij) over ordered pairs (the quantity the optimizer ascends)."""
    p = P.values if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if p.shape[0] != Y.shape[0]:
        raise DataFormatError("affinity and coordinate sizes disagree")
    w = _pair_weights(Y)
    z = w.sum()
    logw = np.zeros_like(w)
    mask = w > 0
    logw[mask] = np.log(w[mask])
    return float((p * logw).sum() - math.log(z) * p.sum())


def kl_gradient(p: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Gradient of KL(P || Q) at Y (the optimizer descends this)."""
    w = _pair_weights(Y)
    z = w.sum()
    m = (p - w / z) * w
    return 4.0 * (m.sum(axis=1)[:, None] * Y - m @ Y)


def tsne_optimize(
    P: AffinityMatrix,
    init: np.ndarray,
    params: OptimizerParams = OptimizerParams(),
    engine: str = "custom",
    gcp: float = float("nan"),
    seed: int = -1,
) -> EmbeddingRun:
    """Momentum gradient descent on the embedding objective with early exaggeration.

    Over the final 50 iterations (after exaggeration ends) steps are
    safeguarded: a step that would decrease the objective by more than 1e-6
    is retried with a halved step and reset momentum, so the objective tail
    is non-decreasing within that tolerance.
    """
    init = np.asarray(init, dtype=float)
    if init.shape != (P.n, 2):
        raise DataFormatError(f"init must be {P.n} x 2, got {init.shape}")
    p = P.values
    Y = init.copy()
    vel = np.zeros_like(Y)
    tail_start = max(params.exaggeration_iters, params.iterations - 50)
    tail: list[float] = []
    obj_cur = None
    for it in range(params.iterations):
        ex = params.exaggeration if it < params.exaggeration_iters else 1.0
        mom = params.momentum_early if it < params.momentum_switch else params.momentum_late
        grad = kl_gradient(ex * p, Y)
        if not np.isfinite(grad).all():
            raise NumericError(f"non-finite gradient at iteration {it}")
        if it < tail_start:
            vel = mom * vel - params.learning_rate * grad
            Y = Y + vel
            Y = Y - Y.mean(axis=0)
            continue
        if obj_cur is None:
            obj_cur = objective(P, Y)
            tail.append(obj_cur)
        step = mom * vel - params.learning_rate * grad
        cand = Y + step
        obj_new = objective(P, cand)
        if obj_new < obj_cur - 1e-6:
            lr = params.learning_rate
            for _ in range(40):
                lr *= 0.5
                step = -lr * grad
                cand = Y + step
                obj_new = objective(P, cand)
                if obj_new >= obj_cur - 1e-6:
                    break
            else:
                step = np.zeros_like(Y)
                cand = Y
                obj_new = obj_cur
        vel = step
        Y = cand - cand.mean(axis=0)
        obj_cur = obj_new
        tail.append(obj_cur)
    final = obj_cur if obj_cur is not None else objective(P, Y)
    return EmbeddingRun(
        coords=Y,
        engine=engine,
        gcp=gcp,
        seed=seed,
        final_objective=final,
        iterations=params.iterations,
        tail_objectives=tuple(tail),
    )


def prepare_affinities(engine: str, X: DataMatrix, gcp: float) -> AffinityMatrix:
    """Distance computation plus affinity construction for a named engine."""
    if engine == "tsne-perplexity":
        return tsne_affinities_perplexity(pairwise_distances(X), gcp)
    if engine == "tsne-knn":
        k = int(gcp)
        if k != gcp:
            raise ValueError(f"tsne-knn needs an integer neighbor count, got {gcp}")
        return tsne_affinities_knn(knn_graph(pairwise_distances(X), k))
    raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")


def run_engine(
    engine: str,
    X: DataMatrix,
    gcp: float,
    seed: int,
    params: OptimizerParams = OptimizerParams(),
) -> EmbeddingRun:
    """Compose distances -> affinities -> random init -> optimization."""
    P = prepare_affinities(engine, X, gcp)
    init = random_init(X.n, seed, params.init_scale)
    return tsne_optimize(P, init, params, engine=engine, gcp=gcp, seed=seed)


def save_embedding(run: EmbeddingRun, csv_path: str | Path, meta_path: str | Path | None = None) -> None:
    """Write coordinates as a two-column CSV plus a JSON provenance sidecar."""
    lines = ["dim1,dim2"]
    for x, y in run.coords:
        lines.append(f"{fmt_float(x)},{fmt_float(y)}")
    Path(csv_path).write_text("\n".join(lines) + "\n")
    if meta_path is not None:
        write_json(meta_path, run.meta())


def load_external_embedding(
    path: str | Path,
    engine: str = "external",
    gcp: float = float("nan"),
    seed: int = -1,
) -> EmbeddingRun:
    """Ingest an externally produced two-column embedding CSV."""
    coords = read_numeric_csv(path, expect_cols=2)
    return EmbeddingRun(
        coords=coords,
        engine=engine,
        gcp=gcp,
        seed=seed,
        final_objective=float("nan"),
        iterations=0,
    )
