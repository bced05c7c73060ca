"""Dense linear algebra helpers, the seeded random stream, and PCA.

Matrices are plain ``numpy.float64`` arrays; the helpers here add the shape
checks and conventions the rest of the package relies on.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

RNG_ALGORITHM = "philox4x64-10"
RNG_VERSION = 1


def as_matrix(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {arr.ndim} dimensions")
    return arr


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


# --------------------------------------------------------------------------
# random numbers


def _key_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise DomainError("stream keys must be non-negative")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def derive_seed(seed: int, *keys) -> int:
    """Deterministically derive a 64-bit child seed from ``seed`` and ``keys``.

    Keys may be non-negative integers or strings (strings are hashed with CRC32).
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


class RngStream:
    """Seeded counter-based random stream (Philox 4x64-10 via numpy).

    Normals come from the Box-Muller transform of this stream's own uniforms,
    and shuffles are Fisher-Yates driven by its bounded integers, so the
    sequences depend only on the seed.
    """

    algorithm = RNG_ALGORITHM
    version = RNG_VERSION

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    def spawn(self, *keys) -> "RngStream":
        return RngStream(derive_seed(self.seed, *keys))

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return self._gen.random(int(n))

    def normal(self, n: int) -> np.ndarray:
        n = int(n)
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1], keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        return z[:n]

    def integer(self, high: int) -> int:
        """A single integer in [0, high)."""
        return int(self._gen.integers(0, high))

    def integers(self, high: int, n: int) -> np.ndarray:
        return self._gen.integers(0, high, size=int(n))

    def shuffle(self, items) -> list:
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.integer(i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def permutation(self, n: int) -> np.ndarray:
        return np.array(self.shuffle(range(int(n))), dtype=np.int64)


def rng_uniform(stream: RngStream, n: int) -> np.ndarray:
    return stream.uniform(n)


def rng_normal(stream: RngStream, n: int) -> np.ndarray:
    return stream.normal(n)


def rng_shuffle(stream: RngStream, items) -> list:
    return stream.shuffle(items)


# --------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x d, orthonormal rows
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]


def pca_fit(data, k: int) -> PcaModel:
    """Fit a k-component PCA by eigendecomposition of the sample covariance.

    Variances use the n - 1 denominator. Each component is signed so that its
    largest-magnitude entry is positive (first such entry on exact ties).
    """
    x = as_matrix(data)
    n, d = x.shape
    if n < 2:
        raise DomainError("PCA needs at least two rows")
    if not 1 <= k <= d:
        raise DomainError(f"k must lie in [1, {d}], got {k}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals, kind="stable")[:k]
    variances = np.clip(vals[order], 0.0, None)
    comps = vecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=comps, explained_variance=variances)


def pca_transform(model: PcaModel, data) -> np.ndarray:
    x = as_matrix(data)
    if x.shape[1] != model.dim:
        raise ShapeError(f"data has {x.shape[1]} columns, PCA model expects {model.dim}")
    return (x - model.mean) @ model.components.T


def pca_reconstruct(model: PcaModel, scores) -> np.ndarray:
    scores = as_matrix(scores)
    if scores.shape[1] != model.n_components:
        raise ShapeError("score width does not match the number of components")
    return scores @ model.components + model.mean
