"""Neighbourhood classifiability and the derived regressability score.

For a point i with label y_i, let p+ be the fraction of +1 labels among the
points within distance d of it (i itself included). Its local classifiability
is ``(p+ - p-) * y_i``: 1 in a pure neighbourhood, 0 in an evenly mixed one,
-1 when surrounded by the other class. The dataset score is the mean of the
local values weighted by neighbourhood size.

Regressability of a regression dataset is the classifiability of its
equivalence-transformed points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DataError, RegressionDataset, center
from .equivalence import to_classification

MAX_PAIRS = 100_000
_CHUNK = 1024


@dataclass(frozen=True)
class RegressabilityReport:
    score: float
    per_sample: np.ndarray
    d: float
    d_percentile: float | None
    neighborhood_sizes: np.ndarray
    dropped: tuple[int, ...] = ()

    def histogram(self, bins: int = 10) -> tuple[np.ndarray, np.ndarray]:
        return np.histogram(self.per_sample, bins=bins, range=(-1.0, 1.0))


def neighborhood(points, i: int, d: float) -> np.ndarray:
    """Indices j with ``||x_j - x_i|| <= d``, always including i."""
    if not d > 0:
        raise DataError(f"neighbourhood radius must be positive, got {d}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    dist = np.sqrt(((pts - pts[i]) ** 2).sum(axis=1))
    return np.flatnonzero(dist <= d)


def classifiability_at(points, labels, i: int, d: float) -> float:
    idx = neighborhood(points, i, d)
    lab = np.asarray(labels)[idx]
    p_plus = np.count_nonzero(lab > 0) / idx.size
    return float((2.0 * p_plus - 1.0) * np.sign(labels[i]))


def _neighbour_counts(pts: np.ndarray, labels: np.ndarray, d: float):
    """Per-point (neighbourhood size, number of +1 neighbours), chunked so the
    distance matrix never exceeds _CHUNK rows."""
    n = pts.shape[0]
    sq = np.einsum("ij,ij->i", pts, pts)
    pos = (labels > 0).astype(np.float64)
    sizes = np.empty(n, dtype=np.int64)
    plus = np.empty(n, dtype=np.int64)
    d2 = d * d
    for start in range(0, n, _CHUNK):
        blk = pts[start : start + _CHUNK]
        dist2 = sq[start : start + _CHUNK, None] + sq[None, :] - 2.0 * blk @ pts.T
        # Gram-form distances lose precision for near-coincident points, so
        # borderline entries are recomputed directly.
        near = np.abs(dist2 - d2) <= 1e-9 * (sq[start : start + _CHUNK, None] + sq[None, :] + d2)
        inside = dist2 <= d2
        if near.any():
            r, c = np.nonzero(near)
            exact = ((blk[r] - pts[c]) ** 2).sum(axis=1)
            inside[r, c] = exact <= d2
        rows = np.arange(blk.shape[0])
        inside[rows, start + rows] = True
        sizes[start : start + _CHUNK] = inside.sum(axis=1)
        plus[start : start + _CHUNK] = np.rint(inside @ pos).astype(np.int64)
    return sizes, plus


def classifiability(points, labels, d: float, d_percentile: float | None = None) -> RegressabilityReport:
    if not d > 0:
        raise DataError(f"neighbourhood radius must be positive, got {d}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    labels = np.asarray(labels, dtype=np.float64)
    n = pts.shape[0]
    if n == 0:
        raise DataError("no points")
    sizes, plus = _neighbour_counts(pts, labels, d)
    p_plus = plus / sizes
    per_sample = (2.0 * p_plus - 1.0) * np.sign(labels)
    weights = sizes / n
    # normalized weighted mean keeps the score in [-1, 1]
    score = float(np.sum(weights * per_sample) / np.sum(weights))
    return RegressabilityReport(score, per_sample, float(d), d_percentile, sizes)


def pairwise_distance_sample(points, max_pairs: int = MAX_PAIRS, seed: int = 42) -> np.ndarray:
    """All pairwise distances i<j, or a random subset of ``max_pairs`` of them."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = pts.shape[0]
    total = n * (n - 1) // 2
    if total == 0:
        return np.zeros(0)
    if total <= max_pairs:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n - 1, size=max_pairs)
        j = j + (j >= i)
    return np.sqrt(((pts[i] - pts[j]) ** 2).sum(axis=1))


def select_radius(points, d_percentile: float = 5.0, seed: int = 42, max_pairs: int = MAX_PAIRS) -> float:
    """Neighbourhood radius at a percentile of the pairwise distances.

    When that percentile is zero (many coincident points) the radius falls
    back to a few ulps of the largest distance so that only coincident points
    count as neighbours.
    """
    if not 0 < d_percentile < 100:
        raise DataError(f"d_percentile must lie in (0, 100), got {d_percentile}")
    dist = pairwise_distance_sample(points, max_pairs, seed)
    if dist.size == 0:
        return 1.0
    d = float(np.percentile(dist, d_percentile))
    if d > 0:
        return d
    top = float(dist.max())
    return 4 * np.finfo(float).eps * top if top > 0 else 1.0


def regressability(
    ds: RegressionDataset,
    d_percentile: float = 5.0,
    tau: float | None = None,
    seed: int = 42,
) -> RegressabilityReport:
    """Center, transform to the equivalence dataset and score it."""
    centered, _ = center(ds)
    eq = to_classification(centered, tau)
    d = select_radius(eq.points, d_percentile, seed)
    rep = classifiability(eq.points, eq.labels, d, d_percentile)
    return RegressabilityReport(
        rep.score, rep.per_sample, rep.d, d_percentile, rep.neighborhood_sizes, eq.dropped
    )
