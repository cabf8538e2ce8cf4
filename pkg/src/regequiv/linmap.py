"""Learning a linearizing feature map with the J4 scatter-ratio loss.

A tanh network maps centered inputs x to features phi(x). Each feature
vector is divided by its centered target, u_i = phi(x_i)/z_i, giving the +1
class of an equivalence problem whose -1 class is -u_i. Training minimizes

    J4 = tr(S_w) / (tr(S_b) + eps_div)

which is zero exactly when every u_i is the same vector, i.e. when z is a
linear function of phi(x). A least-squares head z = w.phi(x) is fitted
afterwards.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import DataError, ReferencePoint, RegressionDataset, Scaler
from .equivalence import default_tau

# Training drops |z| < TRAIN_TAU_FACTOR * std(z): dividing by near-zero
# centered targets amplifies target noise without bound.
TRAIN_TAU_FACTOR = 0.2

MODEL_FORMAT = "regequiv-model"
MODEL_VERSION = 1


class TrainingError(RuntimeError):
    pass


class TimeLimitExceeded(RuntimeError):
    pass


@dataclass
class MlpNetwork:
    """Fully connected tanh network; ``weights[l]`` has shape (out, in)."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    loss_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2:
            raise DataError("a network needs at least input and output dimensions")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DataError("one weight matrix and bias vector per layer required")
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.array(b, dtype=np.float64) for b in self.biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_dims[l + 1], self.layer_dims[l])
            if w.shape != shape or b.shape != (shape[0],):
                raise DataError(f"layer {l}: expected weight {shape} and bias ({shape[0]},)")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise DataError(f"layer {l}: non-finite parameters")

    @classmethod
    def init(cls, layer_dims: Sequence[int], seed: int = 42) -> "MlpNetwork":
        """Uniform(-r, r) weights and biases with r = 1/sqrt(fan_in)."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            r = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-r, r, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-r, r, size=fan_out))
        return cls(tuple(layer_dims), weights, biases)

    @property
    def n_inputs(self) -> int:
        return self.layer_dims[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_dims[-1]

    def params(self) -> list[np.ndarray]:
        """Parameters in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(self.layer_dims, [w.copy() for w in self.weights],
                          [b.copy() for b in self.biases], list(self.loss_trace))


def _as_batch(net: MlpNetwork, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    if single:
        x = np.atleast_1d(x).reshape(1, -1)
    if x.shape[1] != net.n_inputs:
        raise DataError(f"network expects {net.n_inputs} inputs, got {x.shape[1]}")
    return x, single


def _forward_cache(net: MlpNetwork, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    for w, b in zip(net.weights, net.biases):
        acts.append(np.tanh(acts[-1] @ w.T + b))
    return acts


def forward(net: MlpNetwork, x) -> np.ndarray:
    """phi(x) for one sample (vector) or a batch (rows)."""
    xb, single = _as_batch(net, x)
    out = _forward_cache(net, xb)[-1]
    return out[0] if single else out


@dataclass(frozen=True)
class ScatterStats:
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    sw_trace: float
    sb_trace: float


def scatter_stats(phi, z) -> ScatterStats:
    phi = np.asarray(phi, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if phi.shape[0] == 0:
        raise DataError("empty batch")
    u = phi / z[:, None]
    mu = u.mean(axis=0)
    # both classes have the same spread about their means, so the pooled
    # 1/(2M) sum collapses to a single 1/M sum over the +1 images
    sw = float(np.mean(np.sum((u - mu) ** 2, axis=1)))
    sb = float(4.0 * mu @ mu)
    return ScatterStats(mu, -mu, sw, sb)


def j4_loss(phi, z, eps_div: float = 1e-8) -> float:
    s = scatter_stats(phi, z)
    return s.sw_trace / (s.sb_trace + eps_div)


def _j4_grad_phi(phi: np.ndarray, z: np.ndarray, eps_div: float):
    m = phi.shape[0]
    u = phi / z[:, None]
    mu = u.mean(axis=0)
    diff = u - mu
    sw = float(np.mean(np.sum(diff**2, axis=1)))
    den = float(4.0 * mu @ mu) + eps_div
    grad_u = (2.0 / m) * diff / den - (8.0 * sw / (m * den * den)) * mu
    return sw / den, grad_u / z[:, None]


def j4_gradient(net: MlpNetwork, x, z, eps_div: float = 1e-8) -> tuple[float, list[np.ndarray]]:
    """Loss and its gradient with respect to ``net.params()`` (same order).

    The batch must already exclude near-zero targets.
    """
    xb, _ = _as_batch(net, x)
    z = np.asarray(z, dtype=np.float64)
    if xb.shape[0] == 0:
        raise DataError("empty batch")
    acts = _forward_cache(net, xb)
    loss, delta = _j4_grad_phi(acts[-1], z, eps_div)
    grads: list[np.ndarray] = []
    for l in range(len(net.weights) - 1, -1, -1):
        delta = delta * (1.0 - acts[l + 1] ** 2)
        grads.append(delta.sum(axis=0))
        grads.append(delta.T @ acts[l])
        if l:
            delta = delta @ net.weights[l]
    grads.reverse()
    return loss, grads


def train_j4(
    ds: RegressionDataset,
    arch: Sequence[int] | None = None,
    lr: float = 0.01,
    epochs: int = 1000,
    seed: int = 42,
    tau: float | None = None,
    eps_div: float = 1e-8,
    callback: Callable[[int, MlpNetwork, float], None] | None = None,
    deadline: float | None = None,
) -> MlpNetwork:
    """Full-batch gradient descent on the J4 loss.

    ``ds`` should already be centered. ``arch`` defaults to n-5-10 and
    ``tau`` to ``TRAIN_TAU_FACTOR * std(z)``. The loss
    before each update is appended to ``loss_trace``; ``callback`` sees the
    network after every completed epoch (1-based epoch number).
    ``deadline`` is a ``time.monotonic()`` value past which training aborts.
    """
    if not lr > 0:
        raise DataError(f"learning rate must be positive, got {lr}")
    if epochs < 1:
        raise DataError(f"epochs must be at least 1, got {epochs}")
    arch = tuple(arch) if arch else (ds.n_features, 5, 10)
    if arch[0] != ds.n_features:
        raise DataError(f"architecture input {arch[0]} != dataset features {ds.n_features}")
    if tau is None:
        tau = TRAIN_TAU_FACTOR * float(np.std(ds.targets)) or default_tau(ds.targets)
    keep = np.abs(ds.targets) >= tau
    if not keep.any():
        raise DataError(f"all samples have |z| < tau={tau:g}")
    x, z = ds.features[keep], ds.targets[keep]

    net = MlpNetwork.init(arch, seed)
    params = net.params()
    for epoch in range(1, epochs + 1):
        loss, grads = j4_gradient(net, x, z, eps_div)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingError(f"J4 training diverged at epoch {epoch} (loss={loss})")
        net.loss_trace.append(loss)
        for p, g in zip(params, grads):
            p -= lr * g
        if callback is not None:
            callback(epoch, net, loss)
        if deadline is not None and time.monotonic() > deadline:
            raise TimeLimitExceeded(f"time limit reached during epoch {epoch}")
    return net


@dataclass(frozen=True)
class LinearHead:
    w: np.ndarray
    train_mse: float
    train_r2: float


def r2_score(z_true, z_pred) -> float:
    """1 - SS_res/SS_tot; 0 when the targets have no variance."""
    z_true = np.asarray(z_true, dtype=np.float64)
    z_pred = np.asarray(z_pred, dtype=np.float64)
    ss_tot = float(np.sum((z_true - z_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    return 1.0 - float(np.sum((z_true - z_pred) ** 2)) / ss_tot


def fit_least_squares(phi, z) -> np.ndarray:
    """Ridge-jittered normal equations, jitter 1e-10 * tr(Phi^T Phi) / p."""
    phi = np.asarray(phi, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if phi.ndim == 1:
        phi = phi.reshape(-1, 1)
    gram = phi.T @ phi
    p = gram.shape[0]
    jitter = 1e-10 * np.trace(gram) / p
    if jitter <= 0:
        jitter = 1e-300
    return np.linalg.solve(gram + jitter * np.eye(p), phi.T @ z)


def fit_linear_head(net: MlpNetwork, ds: RegressionDataset) -> LinearHead:
    """Least-squares z = w.phi(x) over all samples of the centered ``ds``."""
    if ds.n_samples == 0:
        raise DataError("empty dataset")
    phi = forward(net, ds.features)
    w = fit_least_squares(phi, ds.targets)
    pred = phi @ w
    return LinearHead(w, float(np.mean((pred - ds.targets) ** 2)), r2_score(ds.targets, pred))


def predict(net: MlpNetwork, head: LinearHead, ref: ReferencePoint, x, scaler: Scaler | None = None):
    """head.w . phi(x - x0) + z0, for one sample or a batch of rows.

    With a ``scaler`` the raw inputs are standardized first.
    """
    x = np.asarray(x, dtype=np.float64)
    if scaler is not None:
        x = scaler.transform(x)
    xb, single = _as_batch(net, x)
    if ref.x0.shape[0] != xb.shape[1]:
        raise DataError(f"reference has {ref.x0.shape[0]} coordinates, input has {xb.shape[1]}")
    out = forward(net, xb - ref.x0) @ head.w + ref.z0
    return float(out[0]) if single else out


def pca(phi, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project centered rows on the top-k covariance eigenvectors.

    Returns (projection, eigenvalues descending, components as columns).
    Each component's sign is fixed so its largest-magnitude entry is positive.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2:
        raise DataError("expected a matrix")
    p = phi.shape[1]
    if not 1 <= k <= p:
        raise DataError(f"k must be in [1, {p}], got {k}")
    centered = phi - phi.mean(axis=0)
    cov = centered.T @ centered / max(phi.shape[0] - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:k]
    vals, vecs = vals[order], vecs[:, order]
    flip = np.sign(vecs[np.abs(vecs).argmax(axis=0), np.arange(k)])
    vecs = vecs * np.where(flip == 0, 1.0, flip)
    return centered @ vecs, vals, vecs


def pca_project(phi, k: int) -> np.ndarray:
    return pca(phi, k)[0]


def save_model(path, net: MlpNetwork, head: LinearHead, ref: ReferencePoint,
               scaler: Scaler | None = None, meta: dict | None = None) -> None:
    """Write a JSON model file (weights as row-major nested lists)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layer_dims": list(net.layer_dims),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "head": head.w.tolist(),
        "head_train_mse": head.train_mse,
        "head_train_r2": head.train_r2,
        "reference": {"x0": ref.x0.tolist(), "z0": ref.z0},
        "scaler": None if scaler is None else {"mean": scaler.mean.tolist(), "scale": scaler.scale.tolist()},
        "meta": meta or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_model(path) -> tuple[MlpNetwork, LinearHead, ReferencePoint, Scaler | None, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {doc.get('version')}")
    net = MlpNetwork(doc["layer_dims"], doc["weights"], doc["biases"])
    head = LinearHead(np.array(doc["head"], dtype=np.float64), doc["head_train_mse"], doc["head_train_r2"])
    ref = ReferencePoint(np.array(doc["reference"]["x0"]), doc["reference"]["z0"])
    sc = doc.get("scaler")
    scaler = None if sc is None else Scaler(np.array(sc["mean"]), np.array(sc["scale"]))
    return net, head, ref, scaler, doc.get("meta", {})
