"""Confusion matrices, accuracy/precision/recall/F-score and evaluation reports.

Class order is always G, F, W. Per-class scores use the one-vs-rest reduction
with 0/0 treated as 0; the headline numbers in tables are support-weighted.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import CLASS_NAMES, FeatureMatrix, LabelClass
from .errors import DomainError, ShapeError

WEAK = int(LabelClass.W)


def _safe_div(num, den):
    return num / den if den else 0.0


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # [true, predicted]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def one_vs_rest(self, c: int):
        """``(TP, TN, FP, FN)`` treating class ``c`` as positive."""
        tp = int(self.counts[c, c])
        fp = int(self.counts[:, c].sum()) - tp
        fn = int(self.counts[c, :].sum()) - tp
        tn = self.total - tp - fp - fn
        return tp, tn, fp, fn


def confusion(true_labels, predicted) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64).reshape(-1)
    p = np.asarray(predicted, dtype=np.int64).reshape(-1)
    if t.shape != p.shape:
        raise ShapeError(f"{t.size} true labels but {p.size} predictions")
    if t.size == 0:
        raise DomainError("cannot build a confusion matrix from zero samples")
    if min(t.min(), p.min()) < 0 or max(t.max(), p.max()) > 2:
        raise DomainError("labels must be class indices 0..2")
    counts = np.zeros((3, 3), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f_score: float


@dataclass(frozen=True)
class MetricsRecord:
    accuracy: float
    per_class: dict  # class name -> ClassScores
    macro: ClassScores
    weighted: ClassScores

    def to_dict(self) -> dict:
        def sc(s):
            return {"precision": s.precision, "recall": s.recall, "f_score": s.f_score}

        return {"accuracy": self.accuracy,
                "per_class": {k: sc(v) for k, v in self.per_class.items()},
                "macro": sc(self.macro), "weighted": sc(self.weighted)}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsRecord":
        def sc(s):
            return ClassScores(s["precision"], s["recall"], s["f_score"])

        return cls(d["accuracy"], {k: sc(v) for k, v in d["per_class"].items()},
                   sc(d["macro"]), sc(d["weighted"]))


def precision_recall_f(tp: int, fp: int, fn: int) -> ClassScores:
    p = _safe_div(tp, tp + fp)
    r = _safe_div(tp, tp + fn)
    f = _safe_div(2.0 * p * r, p + r)
    return ClassScores(p, r, f)


def metrics(cm: ConfusionMatrix) -> MetricsRecord:
    total = cm.total
    if total < 1:
        raise DomainError("confusion matrix is empty")
    support = cm.counts.sum(axis=1)
    per_class = {}
    for c, name in enumerate(CLASS_NAMES):
        tp, _, fp, fn = cm.one_vs_rest(c)
        per_class[name] = precision_recall_f(tp, fp, fn)
    present = [CLASS_NAMES[c] for c in range(3) if support[c] > 0]

    def avg(attr, weights=None):
        if weights is None:
            return float(np.mean([getattr(per_class[n], attr) for n in present]))
        return float(sum(getattr(per_class[n], attr) * w for n, w in zip(CLASS_NAMES, weights)) / total)

    macro = ClassScores(avg("precision"), avg("recall"), avg("f_score"))
    weighted = ClassScores(avg("precision", support), avg("recall", support), avg("f_score", support))
    return MetricsRecord(float(np.trace(cm.counts)) / total, per_class, macro, weighted)


@dataclass(frozen=True)
class EvaluationReport:
    model_name: str
    dataset_name: str
    seed: int
    confusion: ConfusionMatrix
    metrics: MetricsRecord
    support: tuple
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model_name,
            "dataset": self.dataset_name,
            "seed": self.seed,
            "class_order": list(CLASS_NAMES),
            "confusion": self.confusion.counts.tolist(),
            "metrics": self.metrics.to_dict(),
            "support": list(self.support),
            "flags": dict(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(d["model"], d["dataset"], d["seed"],
                   ConfusionMatrix(np.asarray(d["confusion"], dtype=np.int64)),
                   MetricsRecord.from_dict(d["metrics"]), tuple(d["support"]), dict(d["flags"]))

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        return cls.from_dict(json.loads(text))


def predict_labels(model, rows) -> np.ndarray:
    return np.asarray(model.predict_labels(rows), dtype=np.int64)


def report_from_predictions(true_labels, predicted, model_name="", dataset_name="", seed=0):
    cm = confusion(true_labels, predicted)
    m = metrics(cm)
    support = tuple(int(v) for v in cm.counts.sum(axis=1))
    flags = {"weak_recall_below_half":
             bool(support[WEAK] >= 1 and m.per_class["W"].recall < 0.5)}
    return EvaluationReport(model_name, dataset_name, int(seed), cm, m, support, flags)


def evaluate(model, test: FeatureMatrix, model_name="", dataset_name="", seed=0) -> EvaluationReport:
    if test.n_rows == 0:
        raise DomainError("test set is empty")
    return report_from_predictions(test.labels, predict_labels(model, test.rows),
                                   model_name, dataset_name, seed)


def format_table(reports, average="weighted") -> str:
    """Plain-text table: Algorithm | Accuracy | Precision | Recall | F-score."""
    header = ("Algorithm", "Accuracy", "Precision", "Recall", "F-score")
    rows = []
    for r in reports:
        s = getattr(r.metrics, average)
        rows.append((r.model_name, f"{r.metrics.accuracy:.2f}", f"{s.precision:.2f}",
                     f"{s.recall:.2f}", f"{s.f_score:.2f}"))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(header)]

    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    rule = "+-" + "-+-".join("-" * w for w in widths) + "-+"
    return "\n".join([rule, line(header), rule] + [line(r) for r in rows] + [rule]) + "\n"


def table_json(reports, average="weighted") -> list:
    out = []
    for r in reports:
        s = getattr(r.metrics, average)
        out.append({"algorithm": r.model_name, "accuracy": r.metrics.accuracy,
                    "precision": s.precision, "recall": s.recall, "f_score": s.f_score,
                    "weak_recall": r.metrics.per_class["W"].recall,
                    "weak_recall_below_half": r.flags.get("weak_recall_below_half", False)})
    return out
