"""Regression datasets: CSV ingestion, centering, standardization, folds and
synthetic generators."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise DataError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegressionDataset:
    """M samples with n features and one real target each.

    Arrays are copied and made read-only on construction.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] = ()
    source: str = ""

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(-1, 1)
        feats = _frozen(feats, 2, "features")
        targets = _frozen(self.targets, 1, "targets")
        if feats.shape[0] != targets.shape[0]:
            raise DataError(
                f"features have {feats.shape[0]} rows but targets have {targets.shape[0]}"
            )
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(feats.shape[1]))
        if len(names) != feats.shape[1]:
            raise DataError(f"{len(names)} feature names for {feats.shape[1]} columns")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "RegressionDataset":
        idx = np.asarray(idx)
        return RegressionDataset(self.features[idx], self.targets[idx], self.feature_names, self.source)

    def __len__(self):
        return self.n_samples


@dataclass(frozen=True)
class ReferencePoint:
    """Point (x0, z0) subtracted from every sample so the regressor passes
    through the origin."""

    x0: np.ndarray
    z0: float

    def __post_init__(self):
        object.__setattr__(self, "x0", _frozen(np.atleast_1d(self.x0), 1, "x0"))
        z0 = float(self.z0)
        if not np.isfinite(z0):
            raise DataError("z0 must be finite")
        object.__setattr__(self, "z0", z0)


@dataclass(frozen=True)
class FoldAssignment:
    fold_of_sample: np.ndarray
    k: int
    seed: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays (train, test) for one fold."""
        test = np.flatnonzero(self.fold_of_sample == fold)
        train = np.flatnonzero(self.fold_of_sample != fold)
        return train, test


@dataclass(frozen=True)
class Scaler:
    """Per-column standardization, kept for inverse mapping at prediction."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Scaler":
        features = np.asarray(features, dtype=np.float64)
        mean = features.mean(axis=0)
        scale = features.std(axis=0)
        # constant columns pass through unscaled
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.scale

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) * self.scale + self.mean


def load_csv(path: str | os.PathLike, target_column: str) -> RegressionDataset:
    """Read a comma-delimited UTF-8 file with a header row.

    Every cell must parse as a float. ``target_column`` is removed from the
    features; row order is preserved.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        matches = [j for j, h in enumerate(header) if h == target_column]
        if len(matches) != 1:
            raise DataError(
                f"{path}: target column {target_column!r} "
                + ("not found" if not matches else "appears more than once")
                + f" in header {header}"
            )
        t = matches[0]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            vals = []
            for j, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric cell {cell!r} in column {header[j]!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows)
    keep = [j for j in range(len(header)) if j != t]
    return RegressionDataset(
        data[:, keep],
        data[:, t],
        tuple(header[j] for j in keep),
        source=os.path.basename(path),
    )


def save_csv(ds: RegressionDataset, path: str | os.PathLike, target_column: str = "z") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [target_column])
        for x, z in zip(ds.features, ds.targets):
            w.writerow([repr(float(v)) for v in x] + [repr(float(z))])


def center(ds: RegressionDataset) -> tuple[RegressionDataset, ReferencePoint]:
    """Subtract the sample means of features and targets."""
    if ds.n_samples < 1:
        raise DataError("cannot center an empty dataset")
    x0 = ds.features.mean(axis=0)
    z0 = float(ds.targets.mean())
    out = RegressionDataset(ds.features - x0, ds.targets - z0, ds.feature_names, ds.source)
    return out, ReferencePoint(x0, z0)


def standardize(ds: RegressionDataset, scaler: Scaler | None = None) -> tuple[RegressionDataset, Scaler]:
    """Scale features to zero mean and unit variance; targets are untouched."""
    scaler = scaler or Scaler.fit(ds.features)
    return (
        RegressionDataset(scaler.transform(ds.features), ds.targets, ds.feature_names, ds.source),
        scaler,
    )


def split_folds(ds: RegressionDataset | int, k: int = 10, seed: int = 42) -> FoldAssignment:
    """Shuffle samples into ``k`` folds whose sizes differ by at most one."""
    m = ds if isinstance(ds, (int, np.integer)) else ds.n_samples
    if k < 2:
        raise DataError(f"k must be at least 2, got {k}")
    if m < k:
        raise DataError(f"cannot split {m} samples into {k} folds")
    perm = np.random.default_rng(seed).permutation(m)
    folds = np.empty(m, dtype=np.int64)
    folds[perm] = np.arange(m) % k
    folds.setflags(write=False)
    return FoldAssignment(folds, int(k), int(seed))


SYNTH_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": lambda x: x,
    "square": lambda x: x**2,
    "cube": lambda x: x**3,
    "pow5": lambda x: x**5,
    "sin": np.sin,
    "sin_sq": lambda x: np.sin(x**2),
    "square_plus_sin_sq": lambda x: x**2 + np.sin(x**2),
    "poly_a": lambda x: (x + 1) ** 2 * (x - 3) ** 2,
    "poly_b": lambda x: (x + 3) ** 3 * ((x - 2) * (x + 1) * (x + 2)) ** 2,
    "poly_c": lambda x: (x + 3) ** 2 * ((x + 1) * (x + 2)) ** 2,
}


def synth_generate(
    function_id: str,
    m: int,
    domain: Sequence[float] = (-2.0, 3.0),
    noise_sigma: float = 0.0,
    seed: int = 42,
) -> RegressionDataset:
    """Sample ``m`` points uniformly on ``domain`` and evaluate a 1-D test
    function plus Gaussian noise with standard deviation ``noise_sigma``."""
    try:
        f = SYNTH_FUNCTIONS[function_id]
    except KeyError:
        raise DataError(
            f"unknown function_id {function_id!r}; choose from {sorted(SYNTH_FUNCTIONS)}"
        ) from None
    lo, hi = map(float, domain)
    if m < 1:
        raise DataError("m must be at least 1")
    if not hi > lo:
        raise DataError(f"empty domain [{lo}, {hi}]")
    if noise_sigma < 0:
        raise DataError("noise_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=m)
    z = f(x)
    if noise_sigma > 0:
        z = z + rng.normal(0.0, noise_sigma, size=m)
    return RegressionDataset(x.reshape(-1, 1), z, ("x",), source=f"synth:{function_id}")
