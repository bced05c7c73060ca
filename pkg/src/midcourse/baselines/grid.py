"""Exhaustive grid search scored by stratified k-fold cross-validated accuracy."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ..data import FeatureMatrix
from ..errors import ConfigError, DomainError
from ..numeric import RngStream, derive_seed
from .knn import knn_fit
from .nb import nb_fit
from .rf import rf_fit
from .svm import svm_fit

DEFAULT_GRIDS = {
    "svm": {"C": [0.1, 1, 10, 100], "kernel": ["linear", "rbf"], "rbf_gamma": [0.01, 0.1, 1]},
    "knn": {"k": [1, 3, 5, 7, 9, 11, 13, 15], "metric": ["euclidean", "manhattan"]},
    "rf": {"n_trees": [50, 100, 200], "max_depth": [None, 5, 10]},
    "nb": {"variance_smoothing": [1e-9, 1e-8, 1e-7]},
}

AXES = {
    "svm": ("C", "kernel", "rbf_gamma"),
    "knn": ("k", "metric"),
    "rf": ("n_trees", "max_depth"),
    "nb": ("variance_smoothing",),
}


@dataclass(frozen=True)
class HyperGrid:
    model_kind: str
    axes: dict

    def __post_init__(self):
        if self.model_kind not in AXES:
            raise ConfigError(f"unknown baseline kind {self.model_kind!r}")
        unknown = set(self.axes) - set(AXES[self.model_kind])
        if unknown:
            raise ConfigError(f"{self.model_kind} grid has unknown axes {sorted(unknown)}")
        if not self.axes:
            raise DomainError("empty grid")
        for name, values in self.axes.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise DomainError(f"grid axis {name!r} is empty")

    @classmethod
    def default(cls, kind: str) -> "HyperGrid":
        return cls(kind, {k: list(v) for k, v in DEFAULT_GRIDS[kind].items()})

    @property
    def cardinality(self) -> int:
        return int(np.prod([len(v) for v in self.axes.values()]))

    def configs(self) -> list:
        """Every grid point, in lexicographic order of axis-value positions."""
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.axes.values())]


def fit_baseline(kind: str, config: dict, train: FeatureMatrix, seed: int = 0):
    if kind == "svm":
        return svm_fit(train, C=float(config.get("C", 1.0)), kernel=config.get("kernel", "rbf"),
                       gamma=float(config.get("rbf_gamma", 0.1)))
    if kind == "knn":
        return knn_fit(train, k=int(config.get("k", 5)), metric=config.get("metric", "euclidean"))
    if kind == "nb":
        return nb_fit(train, variance_smoothing=float(config.get("variance_smoothing", 1e-9)))
    if kind == "rf":
        depth = config.get("max_depth")
        return rf_fit(train, n_trees=int(config.get("n_trees", 100)),
                      max_depth=None if depth is None else int(depth), seed=seed)
    raise ConfigError(f"unknown baseline kind {kind!r}")


def stratified_folds(labels, folds: int, seed: int) -> np.ndarray:
    """Fold id per row: each class is shuffled, then dealt round-robin across folds."""
    labels = np.asarray(labels)
    fold_of = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in range(3):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            continue
        perm = RngStream(derive_seed(seed, "folds", c)).permutation(members.size)
        fold_of[members[perm]] = (offset + np.arange(members.size)) % folds
        offset += members.size
    return fold_of


def cv_accuracy(kind: str, config: dict, data: FeatureMatrix, fold_of, folds: int, seed: int):
    """Mean per-fold accuracy, or None when the config cannot be fitted on some fold."""
    scores = []
    for f in range(folds):
        test = fold_of == f
        if not test.any() or test.all():
            continue
        train = data.subset(np.flatnonzero(~test))
        held = data.subset(np.flatnonzero(test))
        try:
            model = fit_baseline(kind, config, train, seed)
        except DomainError:
            return None
        scores.append(float(np.mean(model.predict(held.rows) == held.labels)))
    return float(np.mean(scores)) if scores else None


@dataclass(frozen=True)
class GridSearchResult:
    model_kind: str
    best_config: dict
    best_cv_score: float
    best_index: int
    per_config_scores: tuple = field(default=())  # (config, score or None)

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "best_config": self.best_config,
            "best_cv_score": self.best_cv_score,
            "best_index": self.best_index,
            "per_config_scores": [{"config": c, "score": s} for c, s in self.per_config_scores],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "GridSearchResult":
        return cls(d["model_kind"], d["best_config"], d["best_cv_score"], d["best_index"],
                   tuple((e["config"], e["score"]) for e in d["per_config_scores"]))


def grid_search(kind: str, grid: HyperGrid, train: FeatureMatrix, folds: int = 5,
                seed: int = 0) -> GridSearchResult:
    """Score every grid point on the training split; ties go to the earliest config."""
    if folds < 2:
        raise DomainError("folds must be >= 2")
    if grid.model_kind != kind:
        raise ConfigError(f"grid is for {grid.model_kind!r}, not {kind!r}")
    configs = grid.configs()
    if not configs:
        raise DomainError("empty grid")
    fold_of = stratified_folds(train.labels, folds, seed)
    table = []
    best_i, best_s = -1, -np.inf
    for i, cfg in enumerate(configs):
        s = cv_accuracy(kind, cfg, train, fold_of, folds, derive_seed(seed, "config", i))
        table.append((cfg, s))
        if s is not None and s > best_s:
            best_i, best_s = i, s
    if best_i < 0:
        raise DomainError(f"no {kind} grid point could be fitted")
    return GridSearchResult(kind, configs[best_i], best_s, best_i, tuple(table))


def config_seed(seed: int, index: int) -> int:
    return derive_seed(seed, "config", index)
