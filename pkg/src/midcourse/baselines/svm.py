"""Soft-margin kernel SVM, one-vs-one, trained with SMO.

Each pairwise problem solves the dual

    min 1/2 a'Qa - e'a   s.t.  y'a = 0,  0 <= a <= C,   Q_ij = y_i y_j K(x_i, x_j)

by repeatedly optimizing a two-variable working set until the KKT gap falls
below ``tol``. The first index is the maximal violator; the second is chosen
to maximize the second-order decrease of the objective. Within a pair the
more at-risk class is the positive side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import FeatureMatrix
from ..errors import DomainError, ShapeError, TrainingError
from .common import as_rows, vote_worst

KERNELS = ("linear", "rbf")
TAU = 1e-12
# Linear kernels with large C on overlapping classes can need ~1e5 iterations.
DEFAULT_MAX_ITER = 1_000_000


def kernel_matrix(a, b, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return a @ b.T
    if kernel == "rbf":
        sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise DomainError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True)
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int
    gap: float


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int | None = None) -> SmoResult:
    """Solve one binary dual problem; ``y`` holds +1/-1."""
    n = y.shape[0]
    y = y.astype(np.float64)
    Q = K * np.outer(y, y)
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    if max_iter is None:
        max_iter = max(DEFAULT_MAX_ITER, 100 * n)
    it = 0
    gap = np.inf
    while True:
        score = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        m_up = score[i]
        gap = m_up - score[low].min()
        if gap < tol:
            break
        cand = np.flatnonzero(low & (score < m_up))
        b = m_up - score[cand]
        a = QD[i] + QD[cand] - 2.0 * y[i] * y[cand] * Q[i, cand]
        a = np.where(a > 0, a, TAU)
        j = int(cand[np.argmax(b * b / a)])
        if it >= max_iter:
            raise TrainingError(f"SMO did not converge in {max_iter} iterations (KKT gap {gap:.3g})")
        it += 1
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            else:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, total
                if alpha[i] < 0:
                    alpha[i], alpha[j] = 0.0, total
        G += Q[:, i] * (alpha[i] - ai) + Q[:, j] * (alpha[j] - aj)

    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        # midpoint of the feasible interval for rho
        ub_set = ((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0))
        lb_set = ((y > 0) & (alpha <= 0)) | ((y < 0) & (alpha >= C))
        ub = yG[ub_set].min() if ub_set.any() else np.inf
        lb = yG[lb_set].max() if lb_set.any() else -np.inf
        rho = float(0.5 * (ub + lb)) if np.isfinite(ub) and np.isfinite(lb) else float(
            ub if np.isfinite(ub) else lb)
    return SmoResult(alpha, rho, it, float(gap))


@dataclass(frozen=True)
class PairwiseSvm:
    negative: int  # better class
    positive: int  # more at-risk class
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    alpha: np.ndarray  # full alpha vector over the pair's training rows
    y: np.ndarray
    rho: float

    def decision(self, x, kernel, gamma) -> np.ndarray:
        return kernel_matrix(as_rows(x), self.support_vectors, kernel, gamma) @ self.dual_coef - self.rho


@dataclass(frozen=True)
class SvmModel:
    pairs: tuple
    kernel: str
    gamma: float
    C: float
    n_features: int

    kind = "svm"

    def decision_function(self, x) -> np.ndarray:
        """One column per class pair; positive favours the pair's more at-risk class."""
        x = as_rows(x)
        if x.shape[1] != self.n_features:
            raise ShapeError(f"query has {x.shape[1]} features, model has {self.n_features}")
        return np.column_stack([p.decision(x, self.kernel, self.gamma) for p in self.pairs])

    def predict(self, x) -> np.ndarray:
        dec = self.decision_function(x)
        votes = np.zeros((dec.shape[0], 3), dtype=np.int64)
        rows = np.arange(dec.shape[0])
        for k, p in enumerate(self.pairs):
            winner = np.where(dec[:, k] >= 0, p.positive, p.negative)
            votes[rows, winner] += 1
        return np.array([vote_worst(v) for v in votes])

    predict_labels = predict


def svm_fit(train: FeatureMatrix, C: float = 1.0, kernel: str = "rbf", gamma: float = 0.1,
            tol: float = 1e-3, max_iter: int | None = None) -> SvmModel:
    if kernel not in KERNELS:
        raise DomainError(f"unknown kernel {kernel!r}")
    if C <= 0:
        raise DomainError("C must be > 0")
    classes = np.unique(train.labels)
    if classes.size < 2:
        raise DomainError("SVM needs at least two classes")
    pairs = []
    for a_pos, a in enumerate(classes):
        for b in classes[a_pos + 1:]:
            mask = (train.labels == a) | (train.labels == b)
            x = train.rows[mask]
            y = np.where(train.labels[mask] == b, 1.0, -1.0)
            K = kernel_matrix(x, x, kernel, gamma)
            try:
                res = smo_solve(K, y, C, tol, max_iter)
            except TrainingError as e:
                raise TrainingError(f"pair ({int(a)}, {int(b)}): {e}") from None
            sv = res.alpha > 0
            pairs.append(PairwiseSvm(int(a), int(b), x[sv], res.alpha[sv] * y[sv],
                                     res.alpha, y, res.rho))
    return SvmModel(tuple(pairs), kernel, float(gamma), float(C), train.n_features)


def svm_predict(model: SvmModel, x) -> int:
    return int(model.predict(x)[0])
