"""Command-line entry point.

Every subcommand prints line-delimited JSON records (and appends them to
``<out-dir>/report.jsonl``); each record embeds the effective configuration.
Settings resolve as: built-in defaults < ``--config`` JSON file < flags.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 non-convergence or time limit.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import linmap
from .dataset import (
    DataError,
    RegressionDataset,
    Scaler,
    SYNTH_FUNCTIONS,
    center,
    load_csv,
    save_csv,
    split_folds,
    standardize,
    synth_generate,
)
from .equivalence import (
    bi_bennett_predict,
    bi_bennett_transform,
    predict_from_weights,
    to_classification,
)
from .regressability import regressability
from .svc import KktStatus, SvcProblem, solve_dual

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NONCONVERGED = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class NotConverged(RuntimeError):
    pass


@dataclass
class RunConfig:
    data: str | None = None
    target: str = "z"
    out_dir: str = "out"
    seed: int = 42
    time_limit: float | None = None
    standardize: bool = True
    # svc
    c: float = 10.0
    tol: float = 1e-8
    max_iter: int = 100_000
    # equivalence / regressability
    tau: float | None = None
    d_percentile: float = 5.0
    epsilon: float = 0.1
    # linmap
    arch: list[int] | None = None
    lr: float = 0.01
    epochs: int = 1000
    train_tau: float | None = None
    eps_div: float = 1e-8
    snapshot_epochs: list[int] = field(default_factory=lambda: [100, 500, 1000])
    pca_k: int = 2
    # evaluation
    k_folds: int = 10
    # synth
    function: str = "square"
    m: int = 1200
    domain: list[float] = field(default_factory=lambda: [-2.0, 3.0])
    noise: float = 1.0
    # predict
    model: str | None = None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def validate(self) -> None:
        def check(ok, msg):
            if not ok:
                raise ConfigError(msg)

        def num(name, kind=float):
            v = getattr(self, name)
            check(isinstance(v, (int, float)) and not isinstance(v, bool), f"{name} must be numeric")
            if kind is int:
                check(float(v).is_integer(), f"{name} must be an integer")
                setattr(self, name, int(v))
            else:
                setattr(self, name, float(v))
            return getattr(self, name)

        check(isinstance(self.target, str) and self.target, "target must be a non-empty string")
        check(isinstance(self.out_dir, str) and self.out_dir, "out_dir must be a non-empty string")
        check(num("seed", int) >= 0, "seed must be non-negative")
        check(num("c") > 0, "c must be positive")
        check(num("tol") > 0, "tol must be positive")
        check(num("max_iter", int) >= 1, "max_iter must be >= 1")
        check(0 < num("d_percentile") < 100, "d_percentile must lie in (0, 100)")
        check(num("epsilon") > 0, "epsilon must be positive")
        check(num("lr") > 0, "lr must be positive")
        check(num("epochs", int) >= 1, "epochs must be >= 1")
        check(num("eps_div") > 0, "eps_div must be positive")
        check(num("k_folds", int) >= 2, "k_folds must be >= 2")
        check(num("m", int) >= 1, "m must be >= 1")
        check(num("noise") >= 0, "noise must be non-negative")
        check(num("pca_k", int) >= 1, "pca_k must be >= 1")
        for name in ("tau", "train_tau", "time_limit"):
            if getattr(self, name) is not None:
                check(num(name) > 0, f"{name} must be positive")
        check(isinstance(self.standardize, bool), "standardize must be a boolean")
        check(self.function in SYNTH_FUNCTIONS, f"function must be one of {sorted(SYNTH_FUNCTIONS)}")
        check(
            isinstance(self.domain, (list, tuple)) and len(self.domain) == 2
            and all(isinstance(v, (int, float)) for v in self.domain)
            and self.domain[0] < self.domain[1],
            "domain must be [lo, hi] with lo < hi",
        )
        self.domain = [float(v) for v in self.domain]
        if self.arch is not None:
            check(
                isinstance(self.arch, (list, tuple)) and len(self.arch) >= 2
                and all(isinstance(v, int) and v >= 1 for v in self.arch),
                "arch must list at least two positive layer sizes",
            )
            self.arch = list(self.arch)
        check(
            isinstance(self.snapshot_epochs, (list, tuple))
            and all(isinstance(v, int) and v >= 1 for v in self.snapshot_epochs),
            "snapshot_epochs must be positive integers",
        )
        self.snapshot_epochs = sorted(set(self.snapshot_epochs))


@dataclass
class EvaluationReport:
    folds: list[dict[str, Any]]
    aggregate: dict[str, Any]
    config: dict[str, Any]

    def records(self) -> list[dict[str, Any]]:
        return [dict(r, config=self.config) for r in self.folds] + [dict(self.aggregate, config=self.config)]


# -- helpers -----------------------------------------------------------------


class _Clock:
    def __init__(self, limit: float | None):
        self.start = time.monotonic()
        self.deadline = None if limit is None else self.start + limit

    def check(self, where: str) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise linmap.TimeLimitExceeded(f"time limit reached {where}")

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.start


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, name)
    root = os.path.realpath(cfg.out_dir)
    if os.path.commonpath([root, os.path.realpath(path)]) != root:
        raise ConfigError(f"refusing to write outside {cfg.out_dir}: {name}")
    return path


def _write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _load(cfg: RunConfig) -> RegressionDataset:
    if cfg.data is None:
        raise ConfigError("no dataset given (use --data)")
    return load_csv(cfg.data, cfg.target)


def _prepare(ds: RegressionDataset, cfg: RunConfig, scaler: Scaler | None = None):
    if cfg.standardize:
        return standardize(ds, scaler)
    return ds, None


def _r2(z, pred) -> float:
    return linmap.r2_score(z, pred)


def _mse(z, pred) -> float:
    return float(np.mean((np.asarray(z) - np.asarray(pred)) ** 2))


def _summarize(values: Sequence[float]) -> dict[str, float]:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std()), "min": float(v.min()), "max": float(v.max())}


# -- pipelines -----------------------------------------------------------------


def fit_pipeline(train: RegressionDataset, cfg: RunConfig, clock: _Clock | None = None, callback=None):
    """Standardize (optional), center, train the map and fit the head."""
    prepared, scaler = _prepare(train, cfg)
    centered, ref = center(prepared)
    if not np.any(centered.targets):
        # constant targets: nothing to learn, the head predicts z0
        net = linmap.MlpNetwork.init(cfg.arch or (train.n_features, 5, 10), cfg.seed)
        net.loss_trace.append(0.0)
        return net, linmap.LinearHead(np.zeros(net.n_outputs), 0.0, 0.0), ref, scaler
    net = linmap.train_j4(
        centered,
        cfg.arch,
        cfg.lr,
        cfg.epochs,
        cfg.seed,
        cfg.train_tau,
        cfg.eps_div,
        callback=callback,
        deadline=None if clock is None else clock.deadline,
    )
    head = linmap.fit_linear_head(net, centered)
    return net, head, ref, scaler


def run_evaluate(cfg: RunConfig, ds: RegressionDataset | None = None) -> EvaluationReport:
    """k-fold evaluation of the J4 pipeline: test R^2 and MSE per fold."""
    clock = _Clock(cfg.time_limit)
    ds = _load(cfg) if ds is None else ds
    folds = split_folds(ds, cfg.k_folds, cfg.seed)
    records = []
    for k in range(cfg.k_folds):
        tr_idx, te_idx = folds.train_test(k)
        train, test = ds.subset(tr_idx), ds.subset(te_idx)
        t0 = time.monotonic()
        try:
            net, head, ref, scaler = fit_pipeline(train, cfg, clock)
        except (DataError, linmap.TrainingError) as e:
            raise type(e)(f"fold {k}: {e}") from e
        pred = linmap.predict(net, head, ref, test.features, scaler)
        records.append(
            {
                "record": "fold",
                "fold": k,
                "n_train": len(train),
                "n_test": len(test),
                "test_r2": _r2(test.targets, pred),
                "test_mse": _mse(test.targets, pred),
                "train_r2": head.train_r2,
                "final_loss": net.loss_trace[-1],
                "seconds": time.monotonic() - t0,
            }
        )
        clock.check(f"after fold {k}")
    try:
        score = regressability(_prepare(ds, cfg)[0], cfg.d_percentile, cfg.tau, cfg.seed).score
    except DataError:
        score = None  # every target centers to zero
    agg = {
        "record": "aggregate",
        "source": ds.source,
        "k_folds": cfg.k_folds,
        "test_r2": float(np.mean([r["test_r2"] for r in records])),
        "test_mse": float(np.mean([r["test_mse"] for r in records])),
        "test_r2_summary": _summarize([r["test_r2"] for r in records]),
        "regressability": score,
        "seconds": clock.elapsed,
    }
    return EvaluationReport(records, agg, cfg.to_dict())


def _fit_bibennett(train: RegressionDataset, cfg: RunConfig):
    centered, ref = center(train)
    bb = bi_bennett_transform(centered, cfg.epsilon)
    aug = np.column_stack([bb.points, np.ones(len(bb.labels))])
    sol = solve_dual(SvcProblem(aug, bb.labels, cfg.c), cfg.tol, cfg.max_iter)
    n = train.n_features
    w, eta, b = sol.w[:n], sol.w[n], sol.w[n + 1]
    return w, b, eta, ref, sol


def _fit_equivalence_svc(train: RegressionDataset, cfg: RunConfig):
    centered, ref = center(train)
    eq = to_classification(centered, cfg.tau)
    sol = solve_dual(SvcProblem(eq.points, eq.labels, cfg.c), cfg.tol, cfg.max_iter)
    return sol.w, ref, sol


def run_compare_bibennett(cfg: RunConfig, ds: RegressionDataset | None = None) -> EvaluationReport:
    """Per-fold test R^2 of the Bi-Bennett baseline, the linear equivalence
    SVC and the J4 pipeline."""
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon must be positive")
    clock = _Clock(cfg.time_limit)
    ds = _load(cfg) if ds is None else ds
    folds = split_folds(ds, cfg.k_folds, cfg.seed)
    records = []
    for k in range(cfg.k_folds):
        tr_idx, te_idx = folds.train_test(k)
        train, test = ds.subset(tr_idx), ds.subset(te_idx)
        ptrain, scaler = _prepare(train, cfg)
        xtest = test.features if scaler is None else scaler.transform(test.features)

        w, b, eta, ref, bsol = _fit_bibennett(ptrain, cfg)
        if eta == 0:
            bb_pred = np.full(len(test), ref.z0)
        else:
            bb_pred = bi_bennett_predict(w, b, eta, xtest - ref.x0) + ref.z0
        ws, sref, ssol = _fit_equivalence_svc(ptrain, cfg)
        sv_pred = predict_from_weights(ws, sref, xtest)
        net, head, lref, lscaler = fit_pipeline(train, cfg, clock)
        j4_pred = linmap.predict(net, head, lref, test.features, lscaler)
        records.append(
            {
                "record": "fold",
                "fold": k,
                "bibennett_r2": _r2(test.targets, bb_pred),
                "equivalence_svc_r2": _r2(test.targets, sv_pred),
                "j4_r2": _r2(test.targets, j4_pred),
                "bibennett_converged": bsol.converged,
                "equivalence_svc_converged": ssol.converged,
            }
        )
        clock.check(f"after fold {k}")
    agg = {"record": "aggregate", "source": ds.source, "k_folds": cfg.k_folds, "seconds": clock.elapsed}
    for key in ("bibennett_r2", "equivalence_svc_r2", "j4_r2"):
        agg[key] = float(np.mean([r[key] for r in records]))
    return EvaluationReport(records, agg, cfg.to_dict())


def run_plotdata(cfg: RunConfig, ds: RegressionDataset | None = None) -> dict[str, str]:
    """Write the CSVs behind the diagnostic figures; returns name -> path."""
    ds = _load(cfg) if ds is None else ds
    if len(ds) == 0:
        raise DataError("empty dataset")
    prepared, _ = _prepare(ds, cfg)
    centered, ref = center(prepared)
    eq = to_classification(centered, cfg.tau)
    rep = regressability(prepared, cfg.d_percentile, cfg.tau, cfg.seed)
    files: dict[str, str] = {}

    names = list(ds.feature_names)
    files["transform"] = _out_path(cfg, "transform.csv")
    _write_csv(files["transform"], names + ["label", "source_index"],
               ([*p, int(l), int(s)] for p, l, s in zip(eq.points, eq.labels, eq.source_index)))
    files["classifiability"] = _out_path(cfg, "classifiability.csv")
    _write_csv(files["classifiability"], names + ["label", "source_index", "classifiability", "neighborhood_size"],
               ([*p, int(l), int(s), c, int(n)] for p, l, s, c, n in
                zip(eq.points, eq.labels, eq.source_index, rep.per_sample, rep.neighborhood_sizes)))

    k = min(cfg.pca_k, (cfg.arch or [0, 0, 10])[-1])
    snaps: dict[int, np.ndarray] = {}
    wanted = set(cfg.snapshot_epochs)

    def grab(epoch, net, loss):
        if epoch in wanted:
            snaps[epoch] = linmap.forward(net, centered.features)

    cfg_snap = dataclasses.replace(cfg, epochs=max([cfg.epochs, *cfg.snapshot_epochs]))
    net = linmap.train_j4(centered, cfg_snap.arch, cfg.lr, cfg_snap.epochs, cfg.seed, cfg.train_tau,
                          cfg.eps_div, callback=grab)
    snaps.setdefault(0, linmap.forward(linmap.MlpNetwork.init(net.layer_dims, cfg.seed), centered.features))
    files["loss"] = _out_path(cfg, "loss.csv")
    _write_csv(files["loss"], ["epoch", "j4_loss"], ((i + 1, v) for i, v in enumerate(net.loss_trace)))
    fit_rows = []
    for epoch in sorted(snaps):
        proj, vals, _ = linmap.pca(snaps[epoch], k)
        name = f"pca_epoch{epoch}"
        files[name] = _out_path(cfg, f"{name}.csv")
        _write_csv(files[name], [f"pc{j + 1}" for j in range(k)] + ["z"],
                   ([*row, z] for row, z in zip(proj, centered.targets + ref.z0)))
        a = np.column_stack([proj[:, 0], np.ones(len(proj))])
        fit_rows.append((epoch, _r2(centered.targets, a @ linmap.fit_least_squares(a, centered.targets))))
    files["pca_fit"] = _out_path(cfg, "pca_fit.csv")
    _write_csv(files["pca_fit"], ["epoch", "pc1_linear_r2"], fit_rows)
    return files


# -- subcommands -------------------------------------------------------------


def _emit(cfg: RunConfig, records: list[dict[str, Any]]) -> None:
    path = _out_path(cfg, "report.jsonl")
    with open(path, "a", encoding="utf-8") as fh:
        for r in records:
            cfg_echo = r.pop("config", None)
            if cfg_echo is not None:
                r["config"] = cfg_echo
            line = json.dumps(r, default=_jsonable)
            fh.write(line + "\n")
            print(line)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def cmd_transform(cfg: RunConfig) -> int:
    ds, _ = _prepare(_load(cfg), cfg)
    centered, ref = center(ds)
    eq = to_classification(centered, cfg.tau)
    path = _out_path(cfg, "transform.csv")
    _write_csv(path, list(ds.feature_names) + ["label", "source_index"],
               ([*p, int(l), int(s)] for p, l, s in zip(eq.points, eq.labels, eq.source_index)))
    _emit(cfg, [{"record": "transform", "points": len(eq.labels), "dropped": list(eq.dropped),
                 "tau": eq.tau, "reference": {"x0": ref.x0, "z0": ref.z0}, "output": path,
                 "config": cfg.to_dict()}])
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    ds, _ = _prepare(_load(cfg), cfg)
    centered, ref = center(ds)
    eq = to_classification(centered, cfg.tau)
    sol = solve_dual(SvcProblem(eq.points, eq.labels, cfg.c), cfg.tol, cfg.max_iter)
    hist, edges = np.histogram(sol.lam, bins=10, range=(-cfg.c, cfg.c))
    counts = {s.value: sum(1 for k in sol.kkt_status if k is s) for s in KktStatus}
    _emit(cfg, [{
        "record": "solve", "w": sol.w, "reference": {"x0": ref.x0, "z0": ref.z0},
        "lambda_histogram": {"counts": hist, "edges": edges}, "kkt_status": counts,
        "dual_objective": sol.dual_objective, "primal_objective": sol.primal_objective,
        "duality_gap": sol.duality_gap, "iterations": sol.iterations, "converged": sol.converged,
        "max_violation": sol.max_violation, "train_r2": _r2(ds.targets, predict_from_weights(sol.w, ref, ds.features)),
        "config": cfg.to_dict(),
    }])
    if not sol.converged:
        raise NotConverged(f"dual solver stopped after {sol.iterations} sweeps, violation {sol.max_violation:.3g}")
    return EXIT_OK


def cmd_regressability(cfg: RunConfig) -> int:
    ds, _ = _prepare(_load(cfg), cfg)
    rep = regressability(ds, cfg.d_percentile, cfg.tau, cfg.seed)
    hist, edges = rep.histogram()
    _emit(cfg, [{"record": "regressability", "score": rep.score, "d": rep.d,
                 "d_percentile": rep.d_percentile, "points": len(rep.per_sample),
                 "dropped": list(rep.dropped), "histogram": {"counts": hist, "edges": edges},
                 "config": cfg.to_dict()}])
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    clock = _Clock(cfg.time_limit)
    ds = _load(cfg)
    net, head, ref, scaler = fit_pipeline(ds, cfg, clock)
    model = _out_path(cfg, "model.json")
    linmap.save_model(model, net, head, ref, scaler, meta={"config": cfg.to_dict(), "source": ds.source})
    _write_csv(_out_path(cfg, "loss.csv"), ["epoch", "j4_loss"],
               ((i + 1, v) for i, v in enumerate(net.loss_trace)))
    _emit(cfg, [{"record": "train", "model": model, "epochs": len(net.loss_trace),
                 "initial_loss": net.loss_trace[0], "final_loss": net.loss_trace[-1],
                 "train_r2": head.train_r2, "train_mse": head.train_mse, "seconds": clock.elapsed,
                 "config": cfg.to_dict()}])
    return EXIT_OK


def cmd_predict(cfg: RunConfig) -> int:
    if cfg.model is None:
        raise ConfigError("predict needs --model")
    net, head, ref, scaler, _ = linmap.load_model(cfg.model)
    if cfg.data is None:
        raise ConfigError("no dataset given (use --data)")
    ds = _load_features(cfg.data, cfg.target)
    pred = linmap.predict(net, head, ref, ds.features, scaler)
    path = _out_path(cfg, "predictions.csv")
    _write_csv(path, ["prediction"], ([p] for p in pred))
    rec = {"record": "predict", "n": len(pred), "output": path, "config": cfg.to_dict()}
    if ds.source != "<features-only>":
        rec["r2"] = _r2(ds.targets, pred)
        rec["mse"] = _mse(ds.targets, pred)
    _emit(cfg, [rec])
    return EXIT_OK


def _load_features(path: str, target: str) -> RegressionDataset:
    """Like load_csv, but a missing target column yields zero targets."""
    try:
        return load_csv(path, target)
    except DataError as e:
        if "not found" not in str(e):
            raise
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return RegressionDataset(rows, np.zeros(rows.shape[0]), tuple(h.strip() for h in header), "<features-only>")


def cmd_evaluate(cfg: RunConfig) -> int:
    _emit(cfg, run_evaluate(cfg).records())
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    _emit(cfg, run_compare_bibennett(cfg).records())
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    ds = synth_generate(cfg.function, cfg.m, cfg.domain, cfg.noise, cfg.seed)
    path = _out_path(cfg, f"synth_{cfg.function}.csv")
    save_csv(ds, path, cfg.target)
    _emit(cfg, [{"record": "synth", "output": path, "m": cfg.m, "config": cfg.to_dict()}])
    return EXIT_OK


def cmd_plotdata(cfg: RunConfig) -> int:
    files = run_plotdata(cfg)
    _emit(cfg, [{"record": "plot-data", "files": files, "config": cfg.to_dict()}])
    return EXIT_OK


COMMANDS = {
    "transform": cmd_transform,
    "solve": cmd_solve,
    "regressability": cmd_regressability,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "plot-data": cmd_plotdata,
    "compare-bibennett": cmd_compare,
}


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("global")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--seed", type=int)
    g.add_argument("--out-dir", dest="out_dir")
    g.add_argument("--time-limit", dest="time_limit", type=float, help="seconds")
    d = common.add_argument_group("data")
    d.add_argument("--data", help="CSV file with a header row")
    d.add_argument("--target", help="name of the target column")
    d.add_argument("--standardize", action=argparse.BooleanOptionalAction)
    d.add_argument("--tau", type=float, help="drop |z| < tau before the transform")
    s = common.add_argument_group("svc")
    s.add_argument("--c", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--epsilon", type=float, help="Bi-Bennett shift")
    r = common.add_argument_group("regressability")
    r.add_argument("--d-percentile", dest="d_percentile", type=float)
    t = common.add_argument_group("training")
    t.add_argument("--arch", type=_int_list, help="comma list, e.g. 1,5,10")
    t.add_argument("--lr", type=float)
    t.add_argument("--epochs", type=int)
    t.add_argument("--train-tau", dest="train_tau", type=float)
    t.add_argument("--eps-div", dest="eps_div", type=float)
    t.add_argument("--snapshot-epochs", dest="snapshot_epochs", type=_int_list)
    t.add_argument("--pca-k", dest="pca_k", type=int)
    t.add_argument("--k-folds", dest="k_folds", type=int)
    t.add_argument("--model", help="model file for predict")
    y = common.add_argument_group("synth")
    y.add_argument("--function", choices=sorted(SYNTH_FUNCTIONS))
    y.add_argument("--m", type=int)
    y.add_argument("--domain", type=_float_list, help="lo,hi")
    y.add_argument("--noise", type=float, help="noise standard deviation")

    parser = argparse.ArgumentParser(prog="regequiv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "transform": "write the equivalent classification dataset",
        "solve": "solve the L1-error SVC dual on the equivalence dataset",
        "regressability": "score dataset difficulty",
        "train": "train the J4 map and linear head, save a model file",
        "predict": "apply a saved model to a CSV",
        "evaluate": "k-fold test R^2 of the J4 pipeline",
        "synth": "write a synthetic dataset",
        "plot-data": "write CSVs behind the diagnostic plots",
        "compare-bibennett": "compare with the Bi-Bennett construction",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, argument_default=argparse.SUPPRESS)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args).copy()
    values.pop("command", None)
    base: dict[str, Any] = {}
    path = values.pop("config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                base = RunConfig.loads(fh.read()).to_dict()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
    base.update(values)
    return RunConfig.from_dict(base)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NotConverged, linmap.TrainingError, linmap.TimeLimitExceeded) as e:
        print(f"not converged: {e}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
