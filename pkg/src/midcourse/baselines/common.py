import numpy as np


def vote_worst(counts) -> int:
    """Index of the largest count, taking the highest index on ties."""
    counts = np.asarray(counts)
    return int(len(counts) - 1 - np.argmax(counts[::-1]))


def as_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[None] if x.ndim == 1 else x
