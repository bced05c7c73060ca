from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import FeatureMatrix
from ..errors import DomainError, ShapeError
from .common import as_rows, vote_worst


@dataclass(frozen=True)
class NaiveBayesModel:
    classes: np.ndarray  # class indices present in training
    log_priors: np.ndarray
    means: np.ndarray  # classes x features
    variances: np.ndarray

    kind = "nb"

    def joint_log_likelihood(self, x) -> np.ndarray:
        """Log prior plus summed Gaussian log densities, one column per present class."""
        x = as_rows(x)
        if x.shape[1] != self.means.shape[1]:
            raise ShapeError(f"query has {x.shape[1]} features, model has {self.means.shape[1]}")
        out = np.empty((x.shape[0], len(self.classes)))
        for j in range(len(self.classes)):
            var = self.variances[j]
            ll = -0.5 * np.sum(np.log(2.0 * np.pi * var)) - 0.5 * np.sum((x - self.means[j]) ** 2 / var, axis=1)
            out[:, j] = self.log_priors[j] + ll
        return out

    def predict(self, x) -> np.ndarray:
        jll = self.joint_log_likelihood(x)
        full = np.full((jll.shape[0], 3), -np.inf)
        full[:, self.classes] = jll
        return np.array([vote_worst(row) for row in full])

    predict_labels = predict


def nb_fit(train: FeatureMatrix, variance_smoothing: float = 1e-9) -> NaiveBayesModel:
    """Gaussian naive Bayes; every variance gets ``smoothing * max feature variance`` added."""
    if train.n_rows < 1:
        raise DomainError("cannot fit naive Bayes on zero rows")
    x, y = train.rows, train.labels
    eps = variance_smoothing * x.var(axis=0).max()
    if eps <= 0:
        # every feature constant: fall back to the absolute smoothing value
        eps = max(variance_smoothing, np.finfo(float).tiny)
    classes = np.unique(y)
    means = np.array([x[y == c].mean(axis=0) for c in classes])
    variances = np.array([x[y == c].var(axis=0) for c in classes]) + eps
    priors = np.array([np.mean(y == c) for c in classes])
    return NaiveBayesModel(classes, np.log(priors), means, variances)


def nb_predict(model: NaiveBayesModel, x) -> int:
    return int(model.predict(x)[0])
