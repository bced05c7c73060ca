from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import FeatureMatrix
from ..errors import DomainError, ShapeError
from .common import as_rows, vote_worst

METRICS = ("euclidean", "manhattan")


@dataclass(frozen=True)
class KnnModel:
    rows: np.ndarray
    labels: np.ndarray
    k: int
    metric: str

    kind = "knn"

    def distances(self, x) -> np.ndarray:
        x = as_rows(x)
        if x.shape[1] != self.rows.shape[1]:
            raise ShapeError(f"query has {x.shape[1]} features, model has {self.rows.shape[1]}")
        diff = x[:, None, :] - self.rows[None, :, :]
        if self.metric == "euclidean":
            return np.sqrt((diff * diff).sum(axis=2))
        return np.abs(diff).sum(axis=2)

    def predict(self, x) -> np.ndarray:
        dist = self.distances(x)
        # stable sort: equal distances keep lower training-row index first
        nearest = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return np.array([vote_worst(np.bincount(self.labels[nn], minlength=3)) for nn in nearest])

    predict_labels = predict


def knn_fit(train: FeatureMatrix, k: int = 5, metric: str = "euclidean") -> KnnModel:
    if metric not in METRICS:
        raise DomainError(f"unknown metric {metric!r}")
    if not 1 <= k <= train.n_rows:
        raise DomainError(f"k={k} must lie in [1, {train.n_rows}]")
    return KnnModel(train.rows.copy(), train.labels.copy(), int(k), metric)


def knn_predict(model: KnnModel, x) -> int:
    return int(model.predict(x)[0])
