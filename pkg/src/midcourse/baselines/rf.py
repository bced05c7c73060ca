"""Random forest of CART trees split on Gini impurity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import FeatureMatrix
from ..errors import DomainError, ShapeError
from ..numeric import RngStream
from .common import as_rows, vote_worst

N_CLASSES = 3


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # node x class distribution

    def leaf_index(self, row) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
        return node

    def predict(self, x) -> np.ndarray:
        return np.array([vote_worst(self.value[self.leaf_index(r)]) for r in as_rows(x)])

    @property
    def depth(self) -> int:
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))
        return walk(0)


def _best_split_on(xf, y_onehot, parent_counts):
    """Best threshold on one feature: ``(gain, threshold)`` or None if the feature is constant."""
    order = np.argsort(xf, kind="stable")
    xs = xf[order]
    valid = np.flatnonzero(xs[1:] > xs[:-1])  # split after position i
    if valid.size == 0:
        return None
    n = xs.shape[0]
    left = np.cumsum(y_onehot[order], axis=0)[valid]
    right = parent_counts - left
    nl = left.sum(axis=1)
    nr = n - nl
    gl = 1.0 - np.sum((left / nl[:, None]) ** 2, axis=1)
    gr = 1.0 - np.sum((right / nr[:, None]) ** 2, axis=1)
    gain = gini(parent_counts) - (nl * gl + nr * gr) / n
    best = int(np.argmax(gain))
    i = valid[best]
    lo, hi = xs[i], xs[i + 1]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return float(gain[best]), float(thr)


def build_tree(x, y, max_depth: Optional[int], max_features: int, rng: RngStream) -> DecisionTree:
    d = x.shape[1]
    onehot = np.eye(N_CLASSES)[y]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(counts):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1

    stack = [(np.arange(x.shape[0]), 0, None, None)]
    while stack:
        idx, depth, parent, side = stack.pop()
        counts = onehot[idx].sum(axis=0)
        node = new_node(counts)
        if parent is not None:
            (left if side == "L" else right)[parent] = node
        if np.count_nonzero(counts) <= 1 or idx.size < 2 or (max_depth is not None and depth >= max_depth):
            continue
        # sample max_features candidates; keep drawing past that only if none can split
        perm = rng.permutation(d)
        best = None
        for j, f in enumerate(perm):
            if j >= max_features and best is not None:
                break
            res = _best_split_on(x[idx, f], onehot[idx], counts)
            if res is not None and (best is None or res[0] > best[0]):
                best = (res[0], res[1], int(f))
        if best is None:
            continue
        _, thr, f = best
        feature[node], threshold[node] = f, thr
        go_left = x[idx, f] <= thr
        # right pushed first so the left subtree is numbered first
        stack.append((idx[~go_left], depth + 1, node, "R"))
        stack.append((idx[go_left], depth + 1, node, "L"))

    return DecisionTree(np.array(feature), np.array(threshold), np.array(left),
                        np.array(right), np.array(value))


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple
    n_features: int

    kind = "rf"

    def predict(self, x) -> np.ndarray:
        x = as_rows(x)
        if x.shape[1] != self.n_features:
            raise ShapeError(f"query has {x.shape[1]} features, model has {self.n_features}")
        votes = np.zeros((x.shape[0], N_CLASSES), dtype=np.int64)
        rows = np.arange(x.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict(x)] += 1
        return np.array([vote_worst(v) for v in votes])

    predict_labels = predict


def rf_fit(train: FeatureMatrix, n_trees: int = 100, max_depth: Optional[int] = None,
           seed: int = 0, bootstrap: bool = True, max_features: Optional[int] = None) -> RandomForestModel:
    """Fit ``n_trees`` trees, each on a seeded bootstrap sample.

    ``max_features`` defaults to ``floor(sqrt(d))`` candidates per node.
    """
    n, d = train.rows.shape
    if n < 2:
        raise DomainError("random forest needs at least two training rows")
    if n_trees < 1:
        raise DomainError("n_trees must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise DomainError("max_depth must be >= 0 or None")
    m = max(1, int(math.isqrt(d))) if max_features is None else int(max_features)
    rng = RngStream(seed)
    trees = []
    for t in range(n_trees):
        sub = rng.spawn("tree", t)
        idx = sub.integers(n, n) if bootstrap else np.arange(n)
        trees.append(build_tree(train.rows[idx], train.labels[idx], max_depth, m, sub))
    return RandomForestModel(tuple(trees), d)


def rf_predict(model: RandomForestModel, x) -> int:
    return int(model.predict(x)[0])
