from pathlib import Path

import hypothesis
import numpy as np
import pytest

from midcourse.data import FeatureMatrix

np.seterr(all="raise", under="ignore")

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_fm(rows, labels, names=None):
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    names = names or [f"f{i}" for i in range(rows.shape[1])]
    return FeatureMatrix(rows, labels, names)


@pytest.fixture
def blobs():
    """Three well separated 2-D clusters, 20 rows each, classes G/F/W."""
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
    rows = np.concatenate([c + rng.normal(scale=0.5, size=(20, 2)) for c in centers])
    labels = np.repeat([0, 1, 2], 20)
    return make_fm(rows, labels)
