"""Random test matrices and column sampling for approximate matrix products."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "RngStream",
    "ProbabilityDistribution",
    "SamplingMatrix",
    "as_generator",
    "gaussian_matrix",
    "make_probabilities",
    "randsample",
    "basic_matrix_multiplication",
]

REGIMES = ("optimal", "nearly_optimal", "uniform")


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream)``.

    Each call to :meth:`generator` starts the stream from the beginning, so a
    stream value behaves like a pure seed. Distinct stream ids are spawned
    children of the same :class:`numpy.random.SeedSequence` and are
    statistically independent.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(int(rng)).generator()


def gaussian_matrix(rows: int, cols: int, rng: RngLike) -> np.ndarray:
    """``rows x cols`` matrix with i.i.d. standard normal entries."""
    if rows < 1 or cols < 1:
        raise ValueError(f"dimensions must be positive, got {rows}x{cols}")
    return as_generator(rng).standard_normal((rows, cols))


@dataclass(frozen=True)
class ProbabilityDistribution:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, size: int) -> "ProbabilityDistribution":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "ProbabilityDistribution":
        """Normalize nonnegative scores; an all-zero score vector gives uniform."""
        scores = np.asarray(scores, dtype=np.float64)
        total = scores.sum()
        if total <= 0:
            return cls.uniform(scores.size)
        w = scores / total
        # renormalize once more so the sum lands within 1e-12 for long vectors
        return cls(w / w.sum())


def _column_row_products(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a, axis=0) * np.linalg.norm(b, axis=1)


def make_probabilities(
    a: np.ndarray, b: np.ndarray, regime: str = "optimal", beta: float = 0.5
) -> ProbabilityDistribution:
    """Sampling probabilities over the inner dimension of ``a @ b``.

    ``optimal`` weights index ``i`` by ``|a[:, i]| * |b[i, :]|``;
    ``nearly_optimal`` mixes that with uniform as
    ``beta * optimal + (1 - beta) / I``; ``uniform`` is ``1 / I``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    size = a.shape[1]
    regime = regime.replace("-", "_")
    if regime == "uniform":
        return ProbabilityDistribution.uniform(size)
    optimal = ProbabilityDistribution.from_scores(_column_row_products(a, b))
    if regime == "optimal":
        return optimal
    if regime == "nearly_optimal":
        if not 0 < beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {beta}")
        w = beta * optimal.weights + (1.0 - beta) / size
        return ProbabilityDistribution(w / w.sum())
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


@dataclass(frozen=True)
class SamplingMatrix:
    """Sparse ``I x L`` selector: column ``j`` holds ``scales[j]`` at row ``indices[j]``.

    Indices are 0-based.
    """

    source_dim: int
    indices: np.ndarray
    scales: np.ndarray = field(repr=False)

    @property
    def samples(self) -> int:
        return self.indices.size

    def to_dense(self) -> np.ndarray:
        s = np.zeros((self.source_dim, self.samples))
        s[self.indices, np.arange(self.samples)] = self.scales
        return s

    def right_apply(self, a: np.ndarray) -> np.ndarray:
        """``a @ S``."""
        return a[:, self.indices] * self.scales

    def left_apply_transposed(self, b: np.ndarray) -> np.ndarray:
        """``S^T @ b``."""
        return b[self.indices, :] * self.scales[:, None]


def randsample(samples: int, p: ProbabilityDistribution, rng: RngLike) -> SamplingMatrix:
    """Draw ``samples`` i.i.d. indices from ``p`` and build the scaled selector.

    Sampling is inverse-CDF with a binary search over the cumulative weights;
    zero-weight indices can never be drawn.
    """
    if samples < 1:
        raise ValueError(f"number of samples must be >= 1, got {samples}")
    w = p.weights
    cdf = np.cumsum(w)
    total = cdf[-1]
    if total <= 0:
        raise ValueError("cannot sample from an all-zero distribution")
    u = as_generator(rng).random(samples) * total
    idx = np.searchsorted(cdf, u, side="right")
    # u < total, but guard against rounding at the top end
    last = int(np.flatnonzero(w > 0)[-1])
    np.minimum(idx, last, out=idx)
    scales = 1.0 / np.sqrt(samples * w[idx])
    return SamplingMatrix(w.size, idx, scales)


def basic_matrix_multiplication(
    a: np.ndarray,
    b: np.ndarray,
    samples: int,
    p: ProbabilityDistribution,
    rng: RngLike,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo factors ``C = a S`` and ``R = S^T b`` with ``C @ R ~ a @ b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[0] or len(p) != a.shape[1]:
        raise ValueError(
            f"incompatible shapes a {a.shape}, b {b.shape}, p of length {len(p)}"
        )
    if not 1 <= samples <= a.shape[1]:
        raise ValueError(f"samples must lie in [1, {a.shape[1]}], got {samples}")
    s = randsample(samples, p, rng)
    return s.right_apply(a), s.left_apply_transposed(b)
