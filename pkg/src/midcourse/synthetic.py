"""Seeded synthetic gradebooks with a controlled G/F/W class mix.

Each student is first assigned a class (counts apportioned from ``class_mix``
by largest remainder). Marks are drawn per assessment from a normal profile
for that class and clipped to [0, 100]. The final grade is the unweighted
mean of all marks plus ``noise_std`` Gaussian noise, clipped into the class's
grade band (G 70-100, F 51-69, W 0-50) so the derived labels reproduce the
requested counts exactly.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import (CLASS_NAMES, AssessmentMeta, GradebookTable, StudentRecord,
                   largest_remainder)
from .errors import ConfigError, DomainError
from .numeric import RngStream

GRADE_BANDS = {"G": (70.0, 100.0), "F": (51.0, 69.0), "W": (0.0, 50.0)}
DEFAULT_MEANS = {"G": 85.0, "F": 60.0, "W": 35.0}


@dataclass(frozen=True)
class SyntheticSpec:
    n_students: int
    class_mix: tuple = (0.6, 0.3, 0.1)
    n_assessments: int = 10
    midpoint_count: int = 5
    # class name -> scalar or one value per assessment (percent scale)
    profile_means: dict = field(default_factory=lambda: dict(DEFAULT_MEANS))
    # same layout; None means every spread equals noise_std
    profile_spreads: Optional[dict] = None
    noise_std: float = 10.0
    seed: int = 0
    name: str = "synthetic"

    def __post_init__(self):
        mix = tuple(float(v) for v in self.class_mix)
        object.__setattr__(self, "class_mix", mix)
        if len(mix) != 3 or any(not 0.0 <= v <= 1.0 for v in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise ConfigError(f"class_mix must be three proportions in [0, 1] summing to 1, got {mix}")
        if self.n_students < 1 or self.n_assessments < 1 or self.midpoint_count < 1:
            raise ConfigError("n_students, n_assessments and midpoint_count must be >= 1")
        if self.midpoint_count > self.n_assessments:
            raise ConfigError("midpoint_count cannot exceed n_assessments")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")

    def profile(self, table: Optional[dict], default) -> np.ndarray:
        """``3 x n_assessments`` array from a per-class scalar-or-list mapping."""
        out = np.empty((3, self.n_assessments))
        for c, name in enumerate(CLASS_NAMES):
            v = default[name] if table is None or name not in table else table[name]
            v = np.asarray(v, dtype=float)
            if v.ndim == 0:
                out[c] = v
            elif v.shape == (self.n_assessments,):
                out[c] = v
            else:
                raise ConfigError(f"profile for class {name} must be a scalar or "
                                  f"{self.n_assessments} values")
        return out

    def class_counts(self) -> list:
        counts = largest_remainder(self.n_students, self.class_mix)
        for name, p, k in zip(CLASS_NAMES, self.class_mix, counts):
            if p > 0 and k == 0:
                raise DomainError(f"class {name} gets no students with n_students={self.n_students}")
        return counts

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_mix"] = list(self.class_mix)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad synthetic spec: {e}") from None

    @classmethod
    def load(cls, path) -> "SyntheticSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise ConfigError(f"synthetic spec not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"synthetic spec {path} is not valid JSON: {e}") from None


def generate_synthetic(spec: SyntheticSpec) -> GradebookTable:
    counts = spec.class_counts()
    means = spec.profile(spec.profile_means, DEFAULT_MEANS)
    spread_default = {n: spec.noise_std for n in CLASS_NAMES}
    spreads = spec.profile(spec.profile_spreads, spread_default)

    rng = RngStream(spec.seed)
    classes = np.repeat(np.arange(3), counts)
    classes = classes[rng.spawn("order").permutation(spec.n_students)]
    z = rng.spawn("marks").normal(spec.n_students * spec.n_assessments)
    z = z.reshape(spec.n_students, spec.n_assessments)
    marks = np.clip(means[classes] + spreads[classes] * z, 0.0, 100.0)
    noise = rng.spawn("final").normal(spec.n_students) * spec.noise_std
    final = marks.mean(axis=1) + noise

    students = []
    width = len(str(spec.n_students))
    for i in range(spec.n_students):
        lo, hi = GRADE_BANDS[CLASS_NAMES[classes[i]]]
        students.append(StudentRecord(
            f"S{i + 1:0{width}d}", tuple(float(m) for m in marks[i]),
            float(min(max(final[i], lo), hi))))
    assessments = [
        AssessmentMeta(f"A{j + 1:02d}", 100.0, j, j < spec.midpoint_count)
        for j in range(spec.n_assessments)
    ]
    return GradebookTable(students, assessments)
