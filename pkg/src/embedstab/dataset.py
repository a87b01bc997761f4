"""Data ingestion, synthetic manifold generators, and SVD hard-threshold denoising."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DataMatrix:
    """Dense n-by-p point matrix with optional per-point row ids and labels."""

    values: np.ndarray
    row_ids: list[str] | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DataFormatError("values must be a 2-D matrix")
        n, p = v.shape
        if n < 2:
            raise DataFormatError(f"need at least 2 points, got {n}")
        if p < 1:
            raise DataFormatError("need at least 1 feature")
        if not np.isfinite(v).all():
            raise DataFormatError("values contain non-finite entries")
        object.__setattr__(self, "values", _freeze(v))
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (n,):
                raise DataFormatError(f"labels length {lab.shape} does not match n={n}")
            object.__setattr__(self, "labels", _freeze(lab))
        if self.row_ids is not None and len(self.row_ids) != n:
            raise DataFormatError("row_ids length does not match n")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelVector:
    """Categorical label per point plus the distinct category set."""

    labels: np.ndarray
    categories: tuple = field(default=())

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.size < 1:
            raise DataFormatError("labels must be nonempty")
        cats = tuple(sorted(set(lab.tolist()))) if not self.categories else tuple(self.categories)
        missing = set(lab.tolist()) - set(cats)
        if missing:
            raise DataFormatError(f"labels outside category set: {sorted(missing)!r}")
        object.__setattr__(self, "labels", _freeze(lab))
        object.__setattr__(self, "categories", cats)

    @property
    def n(self) -> int:
        return self.labels.shape[0]


def load_matrix(path: str | Path, label_column: str | None = None) -> DataMatrix:
    """Load a dense CSV matrix; header auto-detected by a non-numeric first row.

    When ``label_column`` names a header column, that column is split off as
    categorical labels and the remaining columns form the matrix.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"no such file: {path}")
    with open(path, newline="") as fh:
        raw = [row for row in csv.reader(fh) if row]
    if not raw:
        raise DataFormatError(f"{path}: empty file")

    def numeric(cell: str) -> bool:
        try:
            float(cell)
        except ValueError:
            return False
        return True

    header = None
    start = 0
    if any(not numeric(c) for c in raw[0]):
        header = [c.strip() for c in raw[0]]
        start = 1
    label_idx = None
    if label_column is not None:
        if header is None or label_column not in header:
            raise DataFormatError(f"{path}: label column {label_column!r} not found in header")
        label_idx = header.index(label_column)
    width = len(raw[start]) if len(raw) > start else 0
    if width == 0:
        raise DataFormatError(f"{path}: no data rows")

    values = []
    labels = [] if label_idx is not None else None
    for i, row in enumerate(raw[start:]):
        line_no = start + i + 1
        if len(row) != width:
            raise DataFormatError(f"{path}: line {line_no} has {len(row)} cells, expected {width}")
        cells = list(row)
        if label_idx is not None:
            labels.append(cells.pop(label_idx).strip())
        parsed = []
        for c, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise DataFormatError(f"{path}: line {line_no}: cell {cell!r} does not parse as a number") from None
            if not math.isfinite(v):
                raise DataFormatError(f"{path}: line {line_no}: non-finite value {cell!r}")
            parsed.append(v)
        values.append(parsed)
    return DataMatrix(np.array(values), labels=np.array(labels) if labels is not None else None)


# Fixed generator curve: (t, sin t) on t in [0, 2*pi], traversed at unit speed
# and zero-padded into the ambient dimension.
_CURVE_T_MAX = 2.0 * math.pi
_CURVE_GRID = 20001


def _curve_arclength_tables() -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, _CURVE_T_MAX, _CURVE_GRID)
    speed = np.sqrt(1.0 + np.cos(t) ** 2)
    # cumulative trapezoid
    ds = 0.5 * (speed[1:] + speed[:-1]) * np.diff(t)
    s = np.concatenate([[0.0], np.cumsum(ds)])
    return t, s


_CURVE_TGRID, _CURVE_SGRID = _curve_arclength_tables()
CURVE_LENGTH = float(_CURVE_SGRID[-1])


def curve_point(s: np.ndarray) -> np.ndarray:
    """Map arclength values to 2-D curve coordinates."""
    t = np.interp(s, _CURVE_SGRID, _CURVE_TGRID)
    return np.column_stack([t, np.sin(t)])


def curve_segment_label(s: np.ndarray) -> np.ndarray:
    """Segment index 1..5 of an arclength value (five equal-length pieces)."""
    seg = np.floor(5.0 * np.asarray(s) / CURVE_LENGTH).astype(int) + 1
    return np.clip(seg, 1, 5)


def generate_curve(n: int, ambient_dim: int = 10, noise_sd: float = 0.0, seed: int = 0) -> DataMatrix:
    """Sample n points along the fixed curve, uniform in arclength, plus noise.

    Sampling is stratified: point i is uniform on the i-th of n equal
    arclength strata, so points are ordered by arclength and the five
    equal-length segments receive exactly n/5 points each when 5 divides n.
    Labels 1..5 give the segment (pseudotime) of each point.
    """
    if n < 10:
        raise ValueError(f"generate_curve needs n >= 10, got {n}")
    if ambient_dim < 2:
        raise ValueError(f"ambient_dim must be >= 2, got {ambient_dim}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=n)
    s = (np.arange(n) + u) / n * CURVE_LENGTH
    base = curve_point(s)
    labels = curve_segment_label(s)
    pts = np.zeros((n, ambient_dim))
    pts[:, :2] = base
    if noise_sd > 0:
        pts += noise_sd * rng.standard_normal((n, ambient_dim))
    return DataMatrix(pts, labels=labels)


def generate_circle(n: int, seed: int = 0) -> DataMatrix:
    """n points with i.i.d. uniform angles on the unit circle (2-D)."""
    if n < 3:
        raise ValueError(f"generate_circle needs n >= 3, got {n}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return DataMatrix(np.column_stack([np.cos(theta), np.sin(theta)]))


def discrete_circle(n: int) -> DataMatrix:
    """The n evenly spaced points (cos(2*pi*i/n), sin(2*pi*i/n)), i = 1..n."""
    if n < 3:
        raise ValueError(f"discrete_circle needs n >= 3, got {n}")
    i = np.arange(1, n + 1)
    theta = 2.0 * math.pi * i / n
    return DataMatrix(np.column_stack([np.cos(theta), np.sin(theta)]))


@dataclass(frozen=True)
class SvdDenoiseResult:
    """Hard-threshold denoising output: the matrix, retained rank, and flags."""

    matrix: DataMatrix
    rank: int | None
    thresholded: bool
    degenerate: bool = False


def denoise_svd(X: DataMatrix, c: float = 0.01) -> SvdDenoiseResult:
    """Truncate X to rank r_max, the largest r with sigma_r / sigma_{r+1} > 1 + c.

    If no rank qualifies the input is returned unchanged (thresholded=False).
    A matrix with all-zero spectrum returns the zero matrix flagged degenerate.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    v = X.values
    u_mat, sig, vt = np.linalg.svd(v, full_matrices=False)
    # Singular values at the numerical-rank floor are round-off noise; treat
    # them as zero so noise-to-noise ratios cannot qualify.
    floor = max(v.shape) * np.finfo(float).eps * (sig[0] if sig.size else 0.0)
    sig = np.where(sig > floor, sig, 0.0)
    if not np.any(sig > 0):
        zero = DataMatrix(np.zeros_like(v), row_ids=X.row_ids, labels=X.labels)
        return SvdDenoiseResult(zero, rank=None, thresholded=False, degenerate=True)
    r_max = None
    for r in range(1, len(sig)):  # ratio needs sigma_{r+1}; r is 1-based rank
        hi, lo = sig[r - 1], sig[r]
        if hi > 0 and (lo == 0 or hi / lo > 1.0 + c):
            r_max = r
    if r_max is None:
        return SvdDenoiseResult(X, rank=None, thresholded=False)
    rec = (u_mat[:, :r_max] * sig[:r_max]) @ vt[:r_max]
    return SvdDenoiseResult(
        DataMatrix(rec, row_ids=X.row_ids, labels=X.labels),
        rank=r_max,
        thresholded=True,
    )
