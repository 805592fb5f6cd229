"""Dense tensors: unfolding, folding, mode-n products and contractions.

Tensors and matrices are plain float64 :class:`numpy.ndarray` objects. The
linearization used everywhere (unfolding columns, file layout) runs the first
index fastest, i.e. Fortran order. Mode indices are 0-based.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "as_tensor",
    "unfold",
    "fold",
    "unfold_columns",
    "mode_n_product",
    "multi_mode_product",
    "contract",
    "frobenius_norm",
    "inner_product",
    "kronecker",
]


def as_tensor(t) -> np.ndarray:
    """Return ``t`` as a float64 array with at least one mode."""
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim < 1:
        raise ValueError("a tensor needs at least one mode")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"every dimension must be positive, got {arr.shape}")
    return arr


def _check_mode(ndim: int, n: int) -> None:
    if not 0 <= n < ndim:
        raise ValueError(f"mode {n} out of range for an order-{ndim} tensor")


def unfold(t: np.ndarray, n: int) -> np.ndarray:
    """Mode-``n`` unfolding.

    Row ``i_n`` collects the mode-``n`` fibers; the column index runs over the
    remaining modes with the lowest-numbered mode fastest.

    >>> t = np.arange(1, 9, dtype=float).reshape((2, 2, 2), order="F")
    >>> unfold(t, 0)
    array([[1., 3., 5., 7.],
           [2., 4., 6., 8.]])
    """
    t = np.asarray(t)
    _check_mode(t.ndim, n)
    return np.moveaxis(t, n, 0).reshape(t.shape[n], -1, order="F")


def fold(m: np.ndarray, n: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), n)
    other = dims[:n] + dims[n + 1:]
    if m.ndim != 2 or m.shape[0] != dims[n] or m.shape[1] != int(np.prod(other)):
        raise ValueError(
            f"matrix of shape {m.shape} cannot be folded into mode {n} of {dims}"
        )
    return np.moveaxis(m.reshape((dims[n],) + other, order="F"), 0, n)


def unfold_columns(t: np.ndarray, n: int, cols: np.ndarray) -> np.ndarray:
    """Columns ``cols`` of ``unfold(t, n)`` without forming the full unfolding.

    Costs ``O(I_n * len(cols))``, which is what makes uniform column sampling
    cheap.
    """
    t = np.asarray(t)
    _check_mode(t.ndim, n)
    cols = np.asarray(cols, dtype=np.intp)
    if t.ndim == 1:
        return t[:, None][:, cols]
    other = t.shape[:n] + t.shape[n + 1:]
    sub = np.unravel_index(cols, other, order="F")
    picked = t[tuple(list(sub[:n]) + [slice(None)] + list(sub[n:]))]
    # numpy puts the sampled axis first unless the advanced indices all
    # trail the slice, which only happens for n == 0
    return picked if n == 0 else picked.T


def mode_n_product(t: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Mode-``n`` product ``t x_n b`` with ``b`` of shape ``(J, I_n)``."""
    t = np.asarray(t)
    b = np.asarray(b)
    _check_mode(t.ndim, n)
    if b.ndim != 2 or b.shape[1] != t.shape[n]:
        raise ValueError(
            f"matrix of shape {b.shape} does not act on mode {n} of size {t.shape[n]}"
        )
    return np.moveaxis(np.tensordot(b, t, axes=(1, n)), 0, n)


def multi_mode_product(
    t: np.ndarray,
    matrices: Sequence[np.ndarray],
    modes: Sequence[int] | None = None,
    transpose: bool = False,
) -> np.ndarray:
    """Apply ``t x_{m1} B1 x_{m2} B2 ...``; with ``transpose`` use ``B.T``."""
    if modes is None:
        modes = range(len(matrices))
    out = np.asarray(t)
    for b, n in zip(matrices, modes):
        out = mode_n_product(out, b.T if transpose else b, n)
    return out


def contract(a: np.ndarray, b: np.ndarray, n: int, m: int) -> np.ndarray:
    """Mode-``(n, m)`` contraction.

    The result's modes are those of ``a`` without ``n`` followed by those of
    ``b`` without ``m``. Contracting two vectors gives a 0-d array.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    _check_mode(a.ndim, n)
    _check_mode(b.ndim, m)
    if a.shape[n] != b.shape[m]:
        raise ValueError(
            f"common modes differ: {a.shape[n]} (mode {n}) vs {b.shape[m]} (mode {m})"
        )
    return np.asarray(np.tensordot(a, b, axes=(n, m)))


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(t)))


def inner_product(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))
