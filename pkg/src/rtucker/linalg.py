"""Factorization kernels shared by the decomposition algorithms.

Thin SVD and QR delegate to LAPACK through numpy; the sign of every singular
pair is normalized so identical inputs give identical outputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "ThinSVD",
    "ThinQR",
    "thin_svd",
    "thin_qr",
    "gram_power_apply",
    "leading_left_singular_vectors",
    "qr_project_extract",
    "orthonormality_residual",
]


class ThinSVD(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


class ThinQR(NamedTuple):
    Q: np.ndarray
    R: np.ndarray


def thin_svd(m: np.ndarray) -> ThinSVD:
    """Economy SVD ``m = U diag(S) V^T`` with a fixed sign convention.

    Each left singular vector is flipped so that its largest-magnitude entry is
    nonnegative; the matching right vector is flipped with it.

    Raises
    ------
    numpy.linalg.LinAlgError
        If LAPACK fails to converge.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("thin_svd expects a matrix")
    if m.size == 0:
        k = min(m.shape)
        return ThinSVD(np.zeros((m.shape[0], k)), np.zeros(k), np.zeros((m.shape[1], k)))
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    pivot = np.abs(u).argmax(axis=0)
    signs = np.sign(u[pivot, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return ThinSVD(u * signs, s, vt.T * signs)


def thin_qr(m: np.ndarray) -> ThinQR:
    """Reduced QR of a tall (or square) matrix."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("thin_qr expects a matrix")
    if m.shape[0] < m.shape[1]:
        raise ValueError(f"thin_qr needs rows >= cols, got {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    return ThinQR(q, r)


def gram_power_apply(
    a: np.ndarray, g: np.ndarray, q: int = 1, strategy: str = "A"
) -> np.ndarray:
    """Compute ``(a a^T)^q g``.

    Strategy ``"A"`` alternates ``a^T @ c`` and ``a @ c`` and never forms the
    Gram matrix, which is the cheaper route when ``2q * g.shape[1] < a.shape[0]``.
    Strategy ``"B"`` forms ``a a^T`` once and applies it ``q`` times; it wins
    for short, very wide sketches.
    """
    a = np.asarray(a, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if q < 1:
        raise ValueError(f"power q must be >= 1, got {q}")
    if a.ndim != 2 or g.ndim != 2 or g.shape[0] != a.shape[0]:
        raise ValueError(f"shape mismatch: a {a.shape}, g {g.shape}")
    strategy = strategy.upper()
    c = g
    if strategy == "A":
        for _ in range(q):
            c = a @ (a.T @ c)
    elif strategy == "B":
        gram = a @ a.T
        for _ in range(q):
            c = gram @ c
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return c


def leading_left_singular_vectors(c: np.ndarray, mu: int) -> np.ndarray:
    """Top-``mu`` left singular vectors of ``c`` as an orthonormal matrix."""
    c = np.asarray(c, dtype=np.float64)
    if not 1 <= mu <= min(c.shape):
        raise ValueError(f"mu={mu} out of range for a {c.shape} matrix")
    return thin_svd(c).U[:, :mu]


def qr_project_extract(c: np.ndarray, a_unfold: np.ndarray, mu: int) -> np.ndarray:
    """Factor extraction through a QR of the sketch.

    ``c = P R``; the top-``mu`` left singular vectors ``U1`` of ``P^T a_unfold``
    are lifted back as ``P @ U1``.
    """
    c = np.asarray(c, dtype=np.float64)
    a_unfold = np.asarray(a_unfold, dtype=np.float64)
    if c.shape[0] != a_unfold.shape[0]:
        raise ValueError(f"shape mismatch: sketch {c.shape}, unfolding {a_unfold.shape}")
    if not 1 <= mu <= c.shape[1]:
        raise ValueError(f"mu={mu} out of range for a sketch with {c.shape[1]} columns")
    p = thin_qr(c).Q
    projected = p.T @ a_unfold
    if mu > min(projected.shape):
        raise ValueError(f"mu={mu} exceeds the rank budget of the projected matrix")
    return p @ thin_svd(projected).U[:, :mu]


def orthonormality_residual(q: np.ndarray) -> float:
    """``max |Q^T Q - I|``."""
    q = np.asarray(q)
    return float(np.abs(q.T @ q - np.eye(q.shape[1])).max()) if q.size else 0.0
