"""Dataset splitting, metrics, the model comparison run and its chart."""
from __future__ import annotations

import concurrent.futures
import datetime as _dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .features import FEATURE_COLUMNS, THREE_PREDICTORS, FeatureTable, read_feature_csv
from .imgio import load_manifest
from .learn import (
    fit_forest,
    fit_kmeans,
    fit_knn,
    fit_lda,
    fit_logistic,
    fit_qda,
    fit_svm,
    fit_tree,
    prune_tree,
    standardize,
    tune_svm,
)
from .learn.design import Classifier
from .learn.subsets import best_subsets
from .learn.svm import KernelSpec
from .pipeline import ImagePipeline

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
MODEL_ORDER = ("logistic", "lda", "qda", "knn", "tree", "forest", "svm", "kmeans")

DEFAULT_MODEL_PARAMS: dict[str, dict[str, Any]] = {
    "logistic": {},
    "lda": {},
    "qda": {},
    "knn": {"k": 5},
    "tree": {"min_leaf": 5, "max_depth": 30, "prune": True, "folds": 10, "subsample": None},
    "forest": {"trees": 100, "max_features": None, "min_leaf": 1},
    "svm": {"kernel": "radial", "cost": 1.0, "gamma": 1.0, "degree": 3, "tune_grid": None, "folds": 5},
    "kmeans": {"K": 2, "restarts": 10},
}


# --------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    """``mode="stratified"`` draws a seeded class-stratified test set;
    ``mode="manifest"`` takes each record's split from ``assignments``
    (record id -> "train"/"test")."""

    mode: str = "stratified"
    test_fraction: float = 0.2
    seed: int = 0
    assignments: Optional[dict] = None

    def __post_init__(self):
        if self.mode not in ("stratified", "manifest"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if self.mode == "stratified" and not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test fraction {self.test_fraction} outside (0, 1)")
        if self.mode == "manifest" and self.assignments is None:
            raise ValueError("manifest split needs per-record assignments")


def split_dataset(table: FeatureTable, spec: SplitSpec) -> tuple[FeatureTable, FeatureTable]:
    n = len(table)
    if spec.mode == "manifest":
        try:
            tags = [spec.assignments[r.id] for r in table.records]
        except KeyError as exc:
            raise ValueError(f"record {exc.args[0]!r} has no split assignment") from None
        bad = set(tags) - {"train", "test"}
        if bad:
            raise ValueError(f"unknown split tags {sorted(bad)}")
        test = [i for i, t in enumerate(tags) if t == "test"]
    else:
        y = table.labels()
        rng = np.random.default_rng(spec.seed)
        test = []
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            idx = idx[rng.permutation(idx.size)]
            k = int(np.floor(spec.test_fraction * idx.size + 0.5))
            test.extend(idx[:k].tolist())
        test.sort()
    in_test = np.zeros(n, dtype=bool)
    in_test[test] = True
    return table.subset(np.flatnonzero(~in_test)), table.subset(np.flatnonzero(in_test))


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        t = np.asarray(y_true).astype(bool)
        p = np.asarray(y_pred).astype(bool)
        return cls(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(~t & ~p)), int(np.sum(t & ~p)))

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def evaluate(model: Classifier, table: FeatureTable) -> tuple[ConfusionMatrix, float]:
    """Confusion matrix and accuracy of ``model`` on a labeled table."""
    if len(table) == 0:
        raise ValueError("cannot evaluate on an empty table")
    X = table.matrix(model.columns)
    cm = ConfusionMatrix.from_predictions(table.labels(), model.predict(X))
    return cm, cm.accuracy


# --------------------------------------------------------------------------
# configuration


@dataclass
class PipelineConfig:
    """Everything ``run_comparison`` needs.

    Features come from ``features`` (a feature CSV) or, failing that, are
    computed from the images listed in ``manifest``. ``models`` maps each
    enabled model name to hyperparameters overriding the defaults.
    """

    features: Optional[str] = None
    manifest: Optional[str] = None
    split: dict = field(default_factory=lambda: {"mode": "stratified", "test_fraction": 0.2, "seed": 0})
    predictor_sets: dict = field(
        default_factory=lambda: {"all": list(FEATURE_COLUMNS), "three": list(THREE_PREDICTORS)}
    )
    models: dict = field(default_factory=lambda: {name: {} for name in MODEL_ORDER})
    seed: int = 0
    image_pipeline: dict = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | os.PathLike = ".") -> "PipelineConfig":
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d, base_dir=str(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PipelineConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    def resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def validate(self) -> None:
        if self.features is None and self.manifest is None:
            raise ValueError("config needs 'features' or 'manifest'")
        for key in ("features", "manifest"):
            p = getattr(self, key)
            if p is not None and not self.resolve(p).exists():
                raise FileNotFoundError(f"{key} path does not exist: {self.resolve(p)}")
        if self.split.get("mode", "stratified") == "manifest" and self.manifest is None:
            raise ValueError("manifest split mode needs a manifest path")
        unknown = set(self.models) - set(MODEL_ORDER)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")
        for name, cols in self.predictor_sets.items():
            bad = set(cols) - set(FEATURE_COLUMNS)
            if bad or not cols:
                raise ValueError(f"predictor set {name!r} has invalid columns {sorted(bad)}")

    def to_dict(self) -> dict:
        return {
            "features": self.features,
            "manifest": self.manifest,
            "split": self.split,
            "predictor_sets": self.predictor_sets,
            "models": self.models,
            "seed": self.seed,
            "image_pipeline": self.image_pipeline,
        }

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def model_params(config: PipelineConfig, name: str) -> dict:
    params = dict(DEFAULT_MODEL_PARAMS[name])
    params.update(config.models.get(name) or {})
    return params


def derived_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([master, *keys]).generate_state(1)[0])


# --------------------------------------------------------------------------
# the comparison run


def fit_named_model(name: str, design, params: dict, seed: int) -> tuple[Classifier, dict]:
    """Fit one named model; returns (model, hyperparameters actually used)."""
    if name == "logistic":
        return fit_logistic(design), {}
    if name == "lda":
        return fit_lda(design), {}
    if name == "qda":
        return fit_qda(design), {}
    if name == "knn":
        return fit_knn(design, params["k"]), {"k": params["k"]}
    if name == "tree":
        d = design
        if params.get("subsample"):
            rng = np.random.default_rng(seed)
            m = min(int(params["subsample"]), design.n)
            d = design.rows(np.sort(rng.choice(design.n, size=m, replace=False)))
        model = fit_tree(d, params["min_leaf"], params["max_depth"])
        used = {"min_leaf": params["min_leaf"], "max_depth": params["max_depth"], "leaves_unpruned": model.root.leaves()}
        if params.get("prune", True):
            model = prune_tree(model, d, params["folds"], seed)
            used.update(alpha=model.alpha, folds=params["folds"])
        used["leaves"] = model.root.leaves()
        if params.get("subsample"):
            used["subsample"] = d.n
        return model, used
    if name == "forest":
        model = fit_forest(design, params["trees"], params["max_features"], seed, min_leaf=params["min_leaf"])
        return model, {"trees": params["trees"], "max_features": model.max_features, "oob_error": model.oob_error}
    if name == "svm":
        cost, gamma = float(params["cost"]), float(params["gamma"])
        used: dict = {"kernel": params["kernel"], "degree": params["degree"]}
        if params.get("tune_grid"):
            tuned = tune_svm(design, params["tune_grid"], params["folds"], seed, params["kernel"], params["degree"])
            cost, gamma = tuned.C, tuned.gamma
            used["cv_table"] = tuned.table
        spec = KernelSpec(params["kernel"], params["degree"], gamma)
        model = fit_svm(design, spec, cost)
        used.update(cost=cost, gamma=gamma, support_vectors=int(model.support_vectors.shape[0]))
        return model, used
    if name == "kmeans":
        model = fit_kmeans(design, params["K"], seed, params["restarts"])
        return model, {"K": params["K"], "restarts": params["restarts"], "objective": model.objective}
    raise ValueError(f"unknown model {name!r}")


@dataclass
class EvalRow:
    model: str
    predictor_set: str
    split: str
    status: str
    accuracy: Optional[float] = None
    confusion: Optional[ConfusionMatrix] = None
    hyperparameters: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "predictor_set": self.predictor_set,
            "split": self.split,
            "status": self.status,
            "accuracy": self.accuracy,
            "confusion": self.confusion.to_dict() if self.confusion else None,
            "hyperparameters": self.hyperparameters,
            "error": self.error,
        }


@dataclass
class EvalReport:
    rows: list[EvalRow]
    config_hash: str
    generated_at: str
    extras: dict = field(default_factory=dict)

    def body(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "rows": [r.to_dict() for r in self.rows],
            **self.extras,
        }

    def body_bytes(self) -> bytes:
        return json.dumps(_jsonable(self.body()), sort_keys=True, indent=2).encode()

    def to_json(self) -> str:
        doc = {"generated_at": self.generated_at, "report": _jsonable(self.body())}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_json())

    def accuracy(self, model: str, predictor_set: str = "all", split: str = "test") -> Optional[float]:
        for r in self.rows:
            if (r.model, r.predictor_set, r.split) == (model, predictor_set, split):
                return r.accuracy
        raise KeyError((model, predictor_set, split))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def complete_rows(table: FeatureTable, columns) -> tuple[FeatureTable, int]:
    """Drop records with a missing value in ``columns``; returns (table, dropped count)."""
    X = table.matrix(columns)
    ok = np.all(np.isfinite(X), axis=1)
    return table.subset(np.flatnonzero(ok)), int((~ok).sum())


def load_tables(config: PipelineConfig) -> tuple[FeatureTable, FeatureTable]:
    manifest = load_manifest(config.resolve(config.manifest)) if config.manifest else None
    if config.features:
        table = read_feature_csv(config.resolve(config.features))
    else:
        table = ImagePipeline.from_dict(config.image_pipeline).run_manifest(manifest)
    split = dict(config.split)
    if split.get("mode") == "manifest":
        split["assignments"] = manifest.split_of()
    return split_dataset(table, SplitSpec(**split))


def _threads() -> int:
    env = os.environ.get("LUNGPIPE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_comparison(
    config: PipelineConfig,
    tables: tuple[FeatureTable, FeatureTable] | None = None,
    clock: Callable[[], str] | None = None,
) -> EvalReport:
    """Fit every enabled model under every predictor set; evaluate on train and test.

    A failing fit is recorded on its rows (``status="error"``) and the run
    continues. Model fits run on a thread pool capped by ``LUNGPIPE_THREADS``;
    each fit gets a seed derived from the master seed and its position, and
    rows are assembled in a fixed order, so the report body is deterministic.
    """
    train, test = tables if tables is not None else load_tables(config)
    names = [m for m in MODEL_ORDER if m in config.models]
    jobs = []
    prepared = {}
    dropped = {}
    for s_idx, (set_name, cols) in enumerate(config.predictor_sets.items()):
        tr, d_tr = complete_rows(train, cols)
        te, d_te = complete_rows(test, cols)
        dropped[set_name] = {"train": d_tr, "test": d_te}
        prepared[set_name] = (tr, te, cols)
        for m_idx, name in enumerate(names):
            jobs.append((name, set_name, derived_seed(config.seed, MODEL_ORDER.index(name), s_idx)))

    def work(job):
        name, set_name, seed = job
        tr, te, cols = prepared[set_name]
        try:
            design = standardize(tr, cols)
            model, used = fit_named_model(name, design, model_params(config, name), seed)
            out = []
            for split_name, tab in (("train", tr), ("test", te)):
                if len(tab) == 0:
                    out.append(EvalRow(name, set_name, split_name, "skipped", hyperparameters=used, error="empty split"))
                    continue
                cm, acc = evaluate(model, tab)
                out.append(EvalRow(name, set_name, split_name, "ok", acc, cm, used))
            return out
        except Exception as exc:  # isolate per-model failures
            log.warning("model %s on %s failed: %s", name, set_name, exc)
            msg = f"{type(exc).__name__}: {exc}"
            return [EvalRow(name, set_name, sp, "error", error=msg) for sp in ("train", "test")]

    with concurrent.futures.ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(work, jobs))
    rows = [r for rs in results for r in rs]

    extras: dict = {
        "n_train": len(train),
        "n_test": len(test),
        "dropped_incomplete": dropped,
        "predictor_sets": {k: list(v) for k, v in config.predictor_sets.items()},
    }
    try:
        all_cols = max(config.predictor_sets.values(), key=len)
        tr, _ = complete_rows(train, all_cols)
        rep = best_subsets(standardize(tr, all_cols))
        extras["best_subsets"] = {
            "selected": rep.selected,
            "rows": [
                {"k": r.k, "variables": list(r.variables), "rss": r.rss, "cp": r.cp, "bic": r.bic, "adj_r2": r.adj_r2}
                for r in rep.rows
            ],
        }
    except Exception as exc:
        extras["best_subsets"] = {"error": f"{type(exc).__name__}: {exc}"}

    stamp = clock() if clock else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return EvalReport(rows, config.hash(), stamp, extras)


# --------------------------------------------------------------------------
# chart

_CHART_HEIGHT = 300.0
_BAR_WIDTH = 16.0
_COLORS = {"all": "#1f77b4", "three": "#ff7f0e"}
_FALLBACK_COLORS = ("#2ca02c", "#d62728", "#9467bd", "#8c564b")


def emit_chart(report: EvalReport, path: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (model, predictor set, split, accuracy) and ``<path>.svg``.

    The SVG is a grouped bar chart: one group per model, one bar per report
    row, bar height = accuracy * 300 px. Train bars are drawn half-transparent.
    """
    if not report.rows:
        raise ValueError("empty report")
    base = Path(path)
    if base.suffix in (".csv", ".svg"):
        base = base.with_suffix("")
    csv_path, svg_path = base.with_suffix(".csv"), base.with_suffix(".svg")

    lines = ["model,predictor_set,split,accuracy"]
    for r in report.rows:
        acc = "" if r.accuracy is None else format(r.accuracy, ".17g")
        lines.append(f"{r.model},{r.predictor_set},{r.split},{acc}")
    csv_path.write_text("\n".join(lines) + "\n")

    groups: dict[str, list[EvalRow]] = {}
    for r in report.rows:
        groups.setdefault(r.model, []).append(r)
    sets = list(dict.fromkeys(r.predictor_set for r in report.rows))
    color = {s: _COLORS.get(s, _FALLBACK_COLORS[i % len(_FALLBACK_COLORS)]) for i, s in enumerate(sets)}

    left, top, gap = 50.0, 20.0, 24.0
    x = left + gap / 2
    bars, labels = [], []
    for model, rows in groups.items():
        x0 = x
        for r in rows:
            acc = r.accuracy if r.accuracy is not None else 0.0
            h = acc * _CHART_HEIGHT
            y = top + _CHART_HEIGHT - h
            opacity = "0.5" if r.split == "train" else "1"
            bars.append(
                f'<rect class="bar" data-model="{r.model}" data-set="{r.predictor_set}" data-split="{r.split}" '
                f'data-accuracy="{acc:.6f}" x="{x:.2f}" y="{y:.2f}" width="{_BAR_WIDTH:.2f}" height="{h:.2f}" '
                f'fill="{color[r.predictor_set]}" fill-opacity="{opacity}"/>'
            )
            x += _BAR_WIDTH
        labels.append(
            f'<text x="{(x0 + x) / 2:.2f}" y="{top + _CHART_HEIGHT + 16:.2f}" font-size="11" '
            f'text-anchor="middle">{model}</text>'
        )
        x += gap
    width = x + 20
    height = top + _CHART_HEIGHT + 60
    axis = [
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + _CHART_HEIGHT}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + _CHART_HEIGHT}" x2="{width - 10:.2f}" y2="{top + _CHART_HEIGHT}" stroke="black"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        ty = top + _CHART_HEIGHT * (1 - tick)
        axis.append(
            f'<text x="{left - 6}" y="{ty + 4:.2f}" font-size="10" text-anchor="end">{tick:.2f}</text>'
        )
    legend = []
    lx = left
    for s in sets:
        legend.append(f'<rect x="{lx:.2f}" y="{height - 18:.2f}" width="10" height="10" fill="{color[s]}"/>')
        legend.append(f'<text x="{lx + 14:.2f}" y="{height - 9:.2f}" font-size="10">{s} predictors</text>')
        lx += 110
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'data-plot-height="{_CHART_HEIGHT:.0f}" data-baseline="{top + _CHART_HEIGHT:.2f}">\n'
        + "\n".join(axis + bars + labels + legend)
        + "\n</svg>\n"
    )
    svg_path.write_text(svg)
    return csv_path, svg_path
