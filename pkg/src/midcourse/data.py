"""Gradebook model and preprocessing.

Fixed pipeline order: ingest -> impute -> round -> label -> midpoint select ->
split -> fit scaler on train -> apply scaler to train and test.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ParseError, ShapeError, ValidationError
from .numeric import RngStream


class LabelClass(enum.IntEnum):
    """Target classes, ordered best to worst. Higher value means more at risk."""

    G = 0
    F = 1
    W = 2


CLASS_ORDER = (LabelClass.G, LabelClass.F, LabelClass.W)
CLASS_NAMES = tuple(c.name for c in CLASS_ORDER)


@dataclass(frozen=True)
class AssessmentMeta:
    name: str
    max_points: float
    chronology_index: int
    available_by_midpoint: bool


@dataclass(frozen=True)
class StudentRecord:
    student_id: str
    marks: tuple  # Optional[float] per assessment, percent of max_points
    final_grade: float


@dataclass(frozen=True)
class GradebookTable:
    students: tuple
    assessments: tuple

    def __post_init__(self):
        object.__setattr__(self, "students", tuple(self.students))
        object.__setattr__(self, "assessments", tuple(self.assessments))
        idx = [a.chronology_index for a in self.assessments]
        if len(set(idx)) != len(idx):
            raise ValidationError("chronology_index values must be unique")
        if any(i < 0 for i in idx):
            raise ValidationError("chronology_index must be >= 0")
        if self.assessments and not any(a.available_by_midpoint for a in self.assessments):
            raise ValidationError("at least one assessment must be available by the midpoint")
        n = len(self.assessments)
        for s in self.students:
            if len(s.marks) != n:
                raise ValidationError(
                    f"student {s.student_id!r} has {len(s.marks)} marks, expected {n}")
            if not 0.0 <= s.final_grade <= 100.0:
                raise ValidationError(
                    f"student {s.student_id!r} final grade {s.final_grade} outside [0, 100]")

    def map_marks(self, fn, final_fn=None) -> "GradebookTable":
        students = [
            replace(s,
                    marks=tuple(fn(m) for m in s.marks),
                    final_grade=final_fn(s.final_grade) if final_fn else s.final_grade)
            for s in self.students
        ]
        return GradebookTable(students, self.assessments)


@dataclass(frozen=True)
class ScalerParams:
    mu: np.ndarray
    sigma: np.ndarray
    n_fit: int

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "sigma": self.sigma.tolist(), "n_fit": self.n_fit}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.asarray(d["mu"], float), np.asarray(d["sigma"], float), int(d["n_fit"]))


@dataclass(frozen=True)
class SplitConfig:
    seed: int = 0
    train_fraction: float = 0.8
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    student_ids: tuple = field(default=())

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if rows.shape[0] != labels.shape[0]:
            raise ShapeError(f"{rows.shape[0]} rows but {labels.shape[0]} labels")
        if np.isnan(rows).any():
            raise ValidationError("feature matrix contains missing entries")
        if labels.size and (labels.min() < 0 or labels.max() > 2):
            raise ValidationError("labels must be class indices 0..2")
        names = tuple(self.feature_names)
        if len(names) != rows.shape[1]:
            raise ShapeError(f"{len(names)} feature names for {rows.shape[1]} columns")
        rows.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "student_ids", tuple(self.student_ids))

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def subset(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        ids = tuple(self.student_ids[i] for i in idx) if self.student_ids else ()
        return FeatureMatrix(self.rows[idx], self.labels[idx], self.feature_names, ids)

    def with_rows(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(rows, self.labels, self.feature_names, self.student_ids)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=3)

    def to_csv(self, path=None) -> str:
        """Features plus a label column; floats written with ``repr`` so output is exact."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        has_ids = bool(self.student_ids)
        w.writerow((["student_id"] if has_ids else []) + list(self.feature_names) + ["label"])
        for i in range(self.n_rows):
            row = [repr(float(v)) for v in self.rows[i]]
            if has_ids:
                row.insert(0, self.student_ids[i])
            w.writerow(row + [CLASS_NAMES[self.labels[i]]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


# --------------------------------------------------------------------------
# ingestion


@dataclass(frozen=True)
class ColumnSchema:
    id_column: str
    final_grade_column: str
    final_grade_max: float
    assessments: tuple  # (column name, AssessmentMeta)

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnSchema":
        cols = d.get("columns")
        if not isinstance(cols, dict) or not cols:
            raise ConfigError("schema needs a non-empty 'columns' mapping")
        id_col = final_col = None
        final_max = 100.0
        assessments = []
        for name, spec in cols.items():
            role = spec.get("role")
            if role == "id":
                if id_col is not None:
                    raise ConfigError("schema names more than one id column")
                id_col = name
            elif role == "final_grade":
                if final_col is not None:
                    raise ConfigError("schema names more than one final_grade column")
                final_col = name
                final_max = float(spec.get("max_points", 100.0))
            elif role == "assessment":
                try:
                    meta = AssessmentMeta(
                        name=name,
                        max_points=float(spec["max_points"]),
                        chronology_index=int(spec["chronology_index"]),
                        available_by_midpoint=bool(spec.get("available_by_midpoint", False)),
                    )
                except KeyError as e:
                    raise ConfigError(f"assessment column {name!r} is missing {e.args[0]!r}") from None
                if meta.max_points <= 0:
                    raise ConfigError(f"assessment column {name!r} needs max_points > 0")
                assessments.append((name, meta))
            else:
                raise ConfigError(f"column {name!r} has unknown role {role!r}")
        if id_col is None or final_col is None:
            raise ConfigError("schema must name an id column and a final_grade column")
        if not assessments:
            raise ConfigError("schema names no assessment columns")
        if final_max <= 0:
            raise ConfigError("final grade max_points must be > 0")
        idx = [m.chronology_index for _, m in assessments]
        if len(set(idx)) != len(idx):
            raise ConfigError("chronology_index values must be unique")
        assessments.sort(key=lambda t: t[1].chronology_index)
        return cls(id_col, final_col, final_max, tuple(assessments))

    @classmethod
    def load(cls, path) -> "ColumnSchema":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"schema file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"schema {path} is not valid JSON: {e}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        cols = {self.id_column: {"role": "id"}}
        for name, m in self.assessments:
            cols[name] = {"role": "assessment", "max_points": m.max_points,
                          "chronology_index": m.chronology_index,
                          "available_by_midpoint": m.available_by_midpoint}
        cols[self.final_grade_column] = {"role": "final_grade", "max_points": self.final_grade_max}
        return {"columns": cols}


def _parse_number(cell: str, line: int, column: str) -> Optional[float]:
    cell = cell.strip()
    if cell == "":
        return None
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"column {column!r}: not a number: {cell!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"column {column!r}: non-finite value {cell!r}", line)
    return v


def ingest_csv(path, schema) -> GradebookTable:
    """Read a gradebook CSV; marks become percent of ``max_points``, blanks stay missing."""
    if not isinstance(schema, ColumnSchema):
        schema = ColumnSchema.from_dict(schema)
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"no such CSV file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty CSV, expected a header row", 1) from None
        except csv.Error as e:
            raise ParseError(str(e), reader.line_num) from None
        header = [h.strip() for h in header]
        needed = [schema.id_column, schema.final_grade_column] + [n for n, _ in schema.assessments]
        missing = [c for c in needed if c not in header]
        if missing:
            raise ParseError(f"header lacks columns {missing}", 1)
        pos = {h: i for i, h in enumerate(header)}

        students, seen = [], set()
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as e:
                raise ParseError(str(e), reader.line_num) from None
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
            sid = row[pos[schema.id_column]].strip()
            if not sid:
                raise ValidationError(f"line {line}: empty student id")
            if sid in seen:
                raise ValidationError(f"duplicate student_id {sid!r} (line {line})")
            seen.add(sid)

            marks = []
            for name, meta in schema.assessments:
                v = _parse_number(row[pos[name]], line, name)
                if v is not None:
                    if not 0.0 <= v <= meta.max_points:
                        raise ValidationError(
                            f"student {sid!r}, column {name!r}: mark {v} outside [0, {meta.max_points}]")
                    v = 100.0 * v / meta.max_points
                marks.append(v)
            final = _parse_number(row[pos[schema.final_grade_column]], line, schema.final_grade_column)
            if final is None:
                raise ValidationError(f"student {sid!r}: final grade is empty")
            if not 0.0 <= final <= schema.final_grade_max:
                raise ValidationError(
                    f"student {sid!r}, column {schema.final_grade_column!r}: "
                    f"final grade {final} outside [0, {schema.final_grade_max}]")
            students.append(StudentRecord(sid, tuple(marks), 100.0 * final / schema.final_grade_max))

    return GradebookTable(students, [m for _, m in schema.assessments])


def write_csv(table: GradebookTable, path, id_column="student_id", final_column="final_grade"):
    """Inverse of :func:`ingest_csv` for a schema with max_points 100 everywhere."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([id_column] + [a.name for a in table.assessments] + [final_column])
        for s in table.students:
            w.writerow([s.student_id]
                       + ["" if m is None else repr(float(m)) for m in s.marks]
                       + [repr(float(s.final_grade))])


def schema_for(table: GradebookTable, id_column="student_id", final_column="final_grade") -> ColumnSchema:
    return ColumnSchema(
        id_column, final_column, 100.0,
        tuple((a.name, replace(a, max_points=100.0)) for a in table.assessments))


# --------------------------------------------------------------------------
# cleaning and labels


def impute_missing(table: GradebookTable) -> GradebookTable:
    return table.map_marks(lambda m: 0.0 if m is None else m)


def round_half_away(x: float) -> float:
    return math.copysign(math.floor(abs(x) + 0.5), x)


def round_grades(table: GradebookTable) -> GradebookTable:
    def _round(m):
        if m is None:
            raise DomainError("round_grades requires imputed marks (found a missing mark)")
        return float(round_half_away(m))

    return table.map_marks(_round, _round)


def derive_label(final_grade) -> LabelClass:
    g = float(final_grade)
    if not math.isfinite(g) or g != math.floor(g):
        raise DomainError(f"final grade must be a rounded integer percent, got {final_grade}")
    if not 0 <= g <= 100:
        raise DomainError(f"final grade {final_grade} outside [0, 100]")
    if g >= 70:
        return LabelClass.G
    if g >= 51:
        return LabelClass.F
    return LabelClass.W


def select_midpoint_features(table: GradebookTable) -> FeatureMatrix:
    cols = sorted((a.chronology_index, j) for j, a in enumerate(table.assessments)
                  if a.available_by_midpoint)
    if not cols:
        raise ConfigError("no assessment is flagged available_by_midpoint")
    order = [j for _, j in cols]
    rows = np.empty((len(table.students), len(order)))
    for i, s in enumerate(table.students):
        for c, j in enumerate(order):
            if s.marks[j] is None:
                raise DomainError(f"student {s.student_id!r} has a missing mark; impute first")
            rows[i, c] = s.marks[j]
    labels = [int(derive_label(s.final_grade)) for s in table.students]
    return FeatureMatrix(rows, labels, [table.assessments[j].name for j in order],
                         [s.student_id for s in table.students])


def preprocess(table: GradebookTable) -> FeatureMatrix:
    """impute -> round -> label -> midpoint-select."""
    return select_midpoint_features(round_grades(impute_missing(table)))


# --------------------------------------------------------------------------
# scaling


def fit_scaler(train: FeatureMatrix) -> ScalerParams:
    if train.n_rows < 1:
        raise DomainError("cannot fit a scaler on zero rows")
    mu = train.rows.mean(axis=0)
    sigma = train.rows.std(axis=0)  # population std, ddof=0
    # the mean of identical floats can be off by an ulp; keep constant columns exactly constant
    sigma[np.ptp(train.rows, axis=0) == 0] = 0.0
    return ScalerParams(mu, sigma, train.n_rows)


def apply_scaler(data: FeatureMatrix, params: ScalerParams) -> FeatureMatrix:
    if data.n_features != params.mu.shape[0]:
        raise ShapeError(f"data has {data.n_features} features, scaler has {params.mu.shape[0]}")
    live = params.sigma > 0
    out = np.zeros_like(data.rows)
    out[:, live] = (data.rows[:, live] - params.mu[live]) / params.sigma[live]
    return data.with_rows(out)


# --------------------------------------------------------------------------
# splitting


def largest_remainder(total: int, weights: Sequence[float]) -> list:
    """Apportion ``total`` integer units proportionally to ``weights``.

    Remainder ties go to the later (more at-risk) entry.
    """
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    if s <= 0:
        raise DomainError("weights must have a positive sum")
    quotas = total * w / s
    base = np.floor(quotas).astype(int)
    left = total - int(base.sum())
    order = sorted(range(len(w)), key=lambda i: (-(quotas[i] - base[i]), -i))
    for i in order[:left]:
        base[i] += 1
    return [int(b) for b in base]


def stratified_split(data: FeatureMatrix, cfg: SplitConfig):
    """Return ``(train, test)``; row order inside each part follows the input."""
    n = data.n_rows
    if n == 0:
        raise DomainError("cannot split an empty dataset")
    test_frac = 1.0 - cfg.train_fraction
    rng = RngStream(cfg.seed)
    test_idx = []
    if cfg.stratified:
        counts = data.class_counts()
        n_test = int(math.floor(n * test_frac + 0.5))
        present = [c for c in range(3) if counts[c] > 0]
        alloc = largest_remainder(n_test, [counts[c] for c in present])
        for c, k in zip(present, alloc):
            members = np.flatnonzero(data.labels == c)
            k = min(k, len(members) - 1) if len(members) > 1 else 0
            perm = rng.spawn("class", c).permutation(len(members))
            test_idx.extend(members[perm[:k]].tolist())
    else:
        n_test = int(math.floor(n * test_frac + 0.5))
        test_idx = rng.spawn("all").permutation(n)[:n_test].tolist()
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    return data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))
