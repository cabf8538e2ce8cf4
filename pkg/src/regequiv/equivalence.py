"""Map regression data onto an equivalent binary classification problem.

A centered sample (x, z) with z != 0 becomes the pair x/z (label +1) and
-x/z (label -1). A hyperplane w through the origin with w.u = +1 on every
positive point is exactly the regressor w.x = z.

The older construction of Bi and Bennett, which duplicates each sample and
shifts the copies by +/- epsilon along the target axis, is kept as a
baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DataError, ReferencePoint, RegressionDataset


@dataclass(frozen=True)
class EquivalentClassificationDataset:
    """Rows ``0..M'-1`` hold the +1 points, rows ``M'..2M'-1`` their negations."""

    points: np.ndarray
    labels: np.ndarray
    source_index: np.ndarray
    dropped: tuple[int, ...]
    tau: float

    @property
    def n_pairs(self) -> int:
        return self.points.shape[0] // 2

    @property
    def positive(self) -> np.ndarray:
        return self.points[: self.n_pairs]


@dataclass(frozen=True)
class BiBennettDataset:
    points: np.ndarray
    labels: np.ndarray
    epsilon: float


def default_tau(targets: np.ndarray) -> float:
    """1e-6 times the spread of the centered targets (floor at tiny)."""
    s = float(np.std(targets))
    return 1e-6 * s if s > 0 else np.finfo(float).tiny


def to_classification(ds: RegressionDataset, tau: float | None = None) -> EquivalentClassificationDataset:
    """Build the equivalence dataset from centered regression data.

    Samples with ``|z| < tau`` cannot be divided through and are reported in
    ``dropped`` instead.
    """
    if tau is None:
        tau = default_tau(ds.targets)
    if not tau > 0:
        raise DataError(f"tau must be positive, got {tau}")
    z = ds.targets
    keep = np.flatnonzero(np.abs(z) >= tau)
    dropped = tuple(int(i) for i in np.flatnonzero(np.abs(z) < tau))
    if keep.size == 0:
        raise DataError(f"all {len(z)} samples have |z| < tau={tau:g}; nothing left to classify")
    u = ds.features[keep] / z[keep, None]
    points = np.vstack([u, -u])
    labels = np.concatenate([np.ones(keep.size), -np.ones(keep.size)])
    source = np.concatenate([keep, keep])
    for a in (points, labels, source):
        a.setflags(write=False)
    return EquivalentClassificationDataset(points, labels, source, dropped, float(tau))


def predict_from_weights(w, ref: ReferencePoint, x) -> float | np.ndarray:
    """Regression estimate ``w.(x - x0) + z0``; ``x`` may be one sample or a
    matrix of samples."""
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    if w.shape[0] != ref.x0.shape[0]:
        raise DataError(f"weights have length {w.shape[0]}, reference has {ref.x0.shape[0]}")
    if x.ndim <= 1:
        x = np.atleast_1d(x)
        if x.shape[0] != w.shape[0]:
            raise DataError(f"sample has length {x.shape[0]}, weights have {w.shape[0]}")
        return float(w @ (x - ref.x0) + ref.z0)
    if x.shape[1] != w.shape[0]:
        raise DataError(f"samples have {x.shape[1]} columns, weights have {w.shape[0]}")
    return (x - ref.x0) @ w + ref.z0


def bi_bennett_transform(ds: RegressionDataset, epsilon: float) -> BiBennettDataset:
    """Augment each sample with its target coordinate shifted by +/- epsilon."""
    if not epsilon > 0:
        raise DataError(f"epsilon must be positive, got {epsilon}")
    m = ds.n_samples
    upper = np.column_stack([ds.features, ds.targets + epsilon])
    lower = np.column_stack([ds.features, ds.targets - epsilon])
    points = np.vstack([upper, lower])
    labels = np.concatenate([np.ones(m), -np.ones(m)])
    return BiBennettDataset(points, labels, float(epsilon))


def bi_bennett_predict(w, b: float, eta: float, x) -> float | np.ndarray:
    """Solve ``w.x + b + eta*z = 0`` for z."""
    if eta == 0:
        raise DataError("eta must be nonzero")
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim <= 1:
        return float(-(w @ np.atleast_1d(x) + b) / eta)
    return -(x @ w + b) / eta
