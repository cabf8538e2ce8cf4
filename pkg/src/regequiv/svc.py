"""L1-error support vector classifier without bias, solved in the dual.

Primal::

    min  1/2 ||w||^2 + C * sum_i |1 - y_i w.x_i|

Dual (no equality constraint because there is no bias)::

    min  1/2 lam^T Q lam - sum(lam),   Q_ij = y_i y_j x_i.x_j
    s.t. -C <= lam_i <= C

Each coordinate of the dual is minimized exactly in closed form, so cyclic
coordinate descent needs no pairing step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import DataError


class KktStatus(str, enum.Enum):
    INTERIOR = "interior"
    AT_LOWER = "at_lower"
    AT_UPPER = "at_upper"


@dataclass(frozen=True)
class SvcProblem:
    points: np.ndarray
    labels: np.ndarray
    c: float = 10.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        labels = np.asarray(self.labels, dtype=np.float64)
        if pts.shape[0] < 1:
            raise DataError("problem needs at least one point")
        if labels.shape != (pts.shape[0],):
            raise DataError(f"{labels.shape[0]} labels for {pts.shape[0]} points")
        if not np.all(np.abs(labels) == 1):
            raise DataError("labels must be +1 or -1")
        if not self.c > 0:
            raise DataError(f"box bound c must be positive, got {self.c}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True)
class DualSolution:
    lam: np.ndarray
    w: np.ndarray
    dual_objective: float
    primal_objective: float
    iterations: int
    converged: bool
    max_violation: float
    kkt_status: tuple[KktStatus, ...]

    @property
    def duality_gap(self) -> float:
        """Primal minus the (maximized) dual value; zero at the optimum."""
        return self.primal_objective + self.dual_objective


def recover_weights(lam, p: SvcProblem) -> np.ndarray:
    """w = sum_i lam_i y_i x_i."""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != p.labels.shape:
        raise DataError(f"{lam.shape[0]} multipliers for {p.labels.shape[0]} points")
    return (lam * p.labels) @ p.points


def dual_objective(lam, p: SvcProblem) -> float:
    lam = np.asarray(lam, dtype=np.float64)
    w = recover_weights(lam, p)
    return float(0.5 * w @ w - lam.sum())


def primal_objective(w, p: SvcProblem) -> float:
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    if w.shape[0] != p.points.shape[1]:
        raise DataError(f"weights have length {w.shape[0]}, points have {p.points.shape[1]} columns")
    slack = 1.0 - p.labels * (p.points @ w)
    return float(0.5 * w @ w + p.c * np.abs(slack).sum())


def projected_gradient(lam, grad, c) -> np.ndarray:
    """Gradient components that could still decrease the objective.

    At lam = +c only a positive gradient (pointing back into the box) is a
    violation; at lam = -c only a negative one.
    """
    pg = np.where(lam >= c, np.maximum(grad, 0.0), grad)
    return np.where(lam <= -c, np.minimum(grad, 0.0), pg)


def kkt_classify(sol: DualSolution | np.ndarray, p: SvcProblem, tol: float = 1e-8) -> tuple[KktStatus, ...]:
    """Label each multiplier as interior or pinned at a box bound.

    At ``lam = +C`` the point falls short of its proximal plane
    (``y w.x <= 1``); at ``lam = -C`` it overshoots (``y w.x >= 1``).
    """
    lam = sol.lam if isinstance(sol, DualSolution) else np.asarray(sol, dtype=np.float64)
    c = p.c
    out = []
    for v in lam:
        if v >= c - tol:
            out.append(KktStatus.AT_UPPER)
        elif v <= -c + tol:
            out.append(KktStatus.AT_LOWER)
        else:
            out.append(KktStatus.INTERIOR)
    return tuple(out)


def _sweeps_python(yx, sq, lam, w, c, n_sweeps, order):
    rows = [yx[i].tolist() for i in order]
    sql = [float(sq[i]) for i in order]
    laml = [float(lam[i]) for i in order]
    wl = w.tolist()
    n = len(wl)
    for _ in range(n_sweeps):
        for t, r in enumerate(rows):
            g = -1.0
            for k in range(n):
                g += wl[k] * r[k]
            old = laml[t]
            new = old - g / sql[t]
            if new > c:
                new = c
            elif new < -c:
                new = -c
            d = new - old
            if d != 0.0:
                laml[t] = new
                for k in range(n):
                    wl[k] += d * r[k]
    lam[order] = laml


def _sweeps_compiled_source(yx, sq, lam, w, c, n_sweeps, order):
    n = yx.shape[1]
    for _ in range(n_sweeps):
        for t in range(order.shape[0]):
            i = order[t]
            g = -1.0
            for k in range(n):
                g += w[k] * yx[i, k]
            old = lam[i]
            new = old - g / sq[i]
            if new > c:
                new = c
            elif new < -c:
                new = -c
            d = new - old
            if d != 0.0:
                lam[i] = new
                for k in range(n):
                    w[k] += d * yx[i, k]


try:
    import numba

    _sweeps_compiled = numba.njit(cache=True)(_sweeps_compiled_source)
except ImportError:  # pragma: no cover - exercised only without numba
    _sweeps_compiled = None


def has_compiled_kernel() -> bool:
    return _sweeps_compiled is not None


def solve_dual(
    p: SvcProblem,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    lam0=None,
    use_compiled: bool | None = None,
) -> DualSolution:
    """Cyclic coordinate descent on the box-constrained dual.

    One iteration is a full sweep over all points. The loop stops when the
    largest projected-gradient component is at most ``tol``; hitting
    ``max_iter`` returns the current iterate with ``converged=False``.

    Sweeps run through numba when it is installed (``use_compiled=None``
    picks it automatically). Both kernels perform identical updates; the
    compiled one checks convergence in batches of sweeps, so ``iterations``
    can overshoot the first converged sweep by less than one batch.
    """
    x, y, c = p.points, p.labels, p.c
    sq = np.einsum("ij,ij->i", x, x)
    active = np.flatnonzero(sq > 0)
    if active.size == 0:
        raise DataError("every point has zero norm; the dual is degenerate")
    if max_iter < 1:
        raise DataError(f"max_iter must be >= 1, got {max_iter}")
    if use_compiled is None:
        use_compiled = _sweeps_compiled is not None
    elif use_compiled and _sweeps_compiled is None:
        raise DataError("compiled kernel requested but numba is not installed")
    lam = np.zeros(len(y)) if lam0 is None else np.clip(np.asarray(lam0, dtype=np.float64), -c, c).copy()
    if lam.shape != y.shape:
        raise DataError(f"{lam.shape[0]} starting multipliers for {y.shape[0]} points")
    yx = np.ascontiguousarray(y[:, None] * x)

    # batch size grows so that cheap problems still check often
    batch = 1
    it = 0
    viol = np.inf
    while it < max_iter:
        k = min(batch, max_iter - it)
        # w is recomputed exactly between batches to stop round-off drift
        w = lam @ yx
        if use_compiled:
            _sweeps_compiled(yx, sq, lam, w, c, k, active)
        else:
            _sweeps_python(yx, sq, lam, w, c, k, active)
        it += k
        grad = yx @ (lam @ yx) - 1.0
        viol = float(np.abs(projected_gradient(lam, grad, c)[active]).max())
        if viol <= tol:
            break
        if use_compiled:
            batch = min(2 * batch, 256)

    sol_lam = lam
    sol_lam.setflags(write=False)
    w = recover_weights(sol_lam, p)
    return DualSolution(
        lam=sol_lam,
        w=w,
        dual_objective=dual_objective(sol_lam, p),
        primal_objective=primal_objective(w, p),
        iterations=it,
        converged=viol <= tol,
        max_violation=viol,
        kkt_status=kkt_classify(sol_lam, p, tol=max(tol, 1e-12) * c),
    )
