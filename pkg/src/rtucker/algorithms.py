"""Tucker decompositions: deterministic HOSVD-family baselines and randomized variants.

Every algorithm takes a dense tensor and an :class:`AlgoConfig` and returns a
:class:`TuckerDecomposition` with orthonormal factors. Randomized variants draw
their Gaussian test matrix for mode ``n`` from stream ``n`` and their column
samples from stream ``N + n``, so a mode's random input does not depend on the
order in which modes are visited.

Algorithm ids used by the registry:

=========  ===============================================================
thosvd     truncated HOSVD
sthosvd    sequentially truncated HOSVD
hooi       higher-order orthogonal iteration (initialized from sthosvd)
alg1       independent modes, Gaussian sketch with power scheme
alg2       sequential modes, Gaussian sketch with power scheme
alg4       independent modes, column-sampled sketch then power scheme
alg5       sequential modes, column-sampled sketch then power scheme
alg6       alg1 with QR-based factor extraction
alg7       alg2 with QR-based factor extraction
=========  ===============================================================
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import gram_power_apply, leading_left_singular_vectors, qr_project_extract
from .sketching import (
    ProbabilityDistribution,
    RngStream,
    gaussian_matrix,
    make_probabilities,
    randsample,
)
from .tensor import as_tensor, frobenius_norm, mode_n_product, unfold, unfold_columns

__all__ = [
    "AlgoConfig",
    "TuckerDecomposition",
    "RankClampWarning",
    "ALGORITHMS",
    "reconstruct",
    "relative_error",
    "fit",
    "t_hosvd",
    "st_hosvd",
    "hooi",
    "rand_thosvd_power",
    "rand_sthosvd_power",
    "rand_thosvd_amm",
    "rand_sthosvd_amm",
    "rand_thosvd_power_qr",
    "rand_sthosvd_power_qr",
    "run_algorithm",
]


class RankClampWarning(UserWarning):
    """A requested rank or sketch size was reduced to fit the tensor."""


@dataclass
class AlgoConfig:
    """Parameters shared by all decomposition algorithms.

    ``ranks`` is the target multilinear rank. ``samples`` optionally fixes the
    number of sampled columns per mode (indexed by mode, not by visiting
    order); when omitted it is ``ceil(alpha * ncols)`` of the unfolding being
    sampled. ``order`` is a 0-based permutation of the modes.
    """

    ranks: Sequence[int]
    oversampling: int = 10
    power: int = 1
    alpha: float = 0.2
    regime: str = "uniform"
    beta: float = 0.5
    samples: Sequence[int] | None = None
    order: Sequence[int] | None = None
    seed: int = 0
    strategy: str = "A"
    hooi_max_iter: int = 50
    hooi_tol: float = 1e-8

    def __post_init__(self):
        self.ranks = tuple(int(r) for r in self.ranks)
        if any(r < 1 for r in self.ranks):
            raise ValueError(f"ranks must be positive, got {self.ranks}")
        if self.oversampling < 0:
            raise ValueError("oversampling must be nonnegative")
        if self.power < 1:
            raise ValueError("power must be >= 1")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.samples is not None:
            self.samples = tuple(int(s) for s in self.samples)
            if any(s < 1 for s in self.samples):
                raise ValueError(f"sample counts must be >= 1, got {self.samples}")
        if self.order is not None:
            self.order = tuple(int(m) for m in self.order)

    def processing_order(self, ndim: int) -> tuple[int, ...]:
        if self.order is None:
            return tuple(range(ndim))
        if sorted(self.order) != list(range(ndim)):
            raise ValueError(f"order {self.order} is not a permutation of 0..{ndim - 1}")
        return self.order


@dataclass
class TuckerDecomposition:
    core: np.ndarray
    factors: list[np.ndarray]
    info: dict = field(default_factory=dict)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(self.core.shape)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)


def reconstruct(d: TuckerDecomposition) -> np.ndarray:
    """Expand ``core x_1 U_1 ... x_N U_N`` to a full tensor."""
    out = d.core
    for n, u in enumerate(d.factors):
        out = mode_n_product(out, u, n)
    return out


def relative_error(a: np.ndarray, approx: np.ndarray) -> float:
    """``|a - approx|_F / |a|_F``."""
    a = np.asarray(a)
    approx = np.asarray(approx)
    if a.shape != approx.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {approx.shape}")
    norm = frobenius_norm(a)
    if norm == 0:
        raise ValueError("relative error is undefined for a zero tensor")
    return frobenius_norm(a - approx) / norm


def fit(a: np.ndarray, approx: np.ndarray) -> float:
    return 1.0 - relative_error(a, approx)


# -- shared plumbing --------------------------------------------------------


def _resolve_ranks(dims: tuple[int, ...], cfg: AlgoConfig, info: dict) -> list[int]:
    if len(cfg.ranks) != len(dims):
        raise ValueError(f"{len(cfg.ranks)} ranks given for an order-{len(dims)} tensor")
    ranks = []
    for n, (mu, size) in enumerate(zip(cfg.ranks, dims)):
        if mu > size:
            _note(info, f"mode {n}: rank {mu} clamped to dimension {size}")
            mu = size
        ranks.append(mu)
    return ranks


def _note(info: dict, message: str) -> None:
    info.setdefault("warnings", []).append(message)
    warnings.warn(message, RankClampWarning, stacklevel=4)


def _sketch_width(n: int, mu: int, size: int, budget: int, cfg: AlgoConfig, info: dict) -> int:
    """Columns of the Gaussian test matrix, clamped to the dimension and budget."""
    want = mu + cfg.oversampling
    width = max(mu, min(want, size, budget))
    if width < want:
        _note(info, f"mode {n}: sketch width {want} clamped to {width}")
    return width


def _extract(c: np.ndarray, mu: int, unfolding: np.ndarray | None) -> np.ndarray:
    if unfolding is None:
        return leading_left_singular_vectors(c, mu)
    return qr_project_extract(c, unfolding, mu)


def _power_factor(
    t: np.ndarray, n: int, mu: int, cfg: AlgoConfig, info: dict, qr: bool
) -> np.ndarray:
    """Gaussian range sketch of ``(A A^T)^q`` for the mode-``n`` unfolding of ``t``."""
    a_n = unfold(t, n)
    width = _sketch_width(n, mu, a_n.shape[0], a_n.shape[1], cfg, info)
    g = gaussian_matrix(a_n.shape[0], width, RngStream(cfg.seed, n))
    c = gram_power_apply(a_n, g, cfg.power, cfg.strategy)
    info.setdefault("sketch_width", {})[n] = width
    return _extract(c, mu, a_n if qr else None)


def _sample_count(n: int, ncols: int, cfg: AlgoConfig) -> int:
    if cfg.samples is not None:
        return cfg.samples[n]
    # rounding first keeps e.g. 0.07 * 100 from becoming 8
    return max(1, math.ceil(round(cfg.alpha * ncols, 9)))


def _sampled_columns(t: np.ndarray, n: int, samples: int, cfg: AlgoConfig) -> np.ndarray:
    """``A_(n) S`` for a RANDSAMPLE selector ``S`` over the columns of ``A_(n)``."""
    ncols = t.size // t.shape[n]
    if cfg.regime.replace("-", "_") == "uniform":
        p = ProbabilityDistribution.uniform(ncols)
    else:
        a_n = unfold(t, n)
        p = make_probabilities(a_n, a_n.T, cfg.regime, cfg.beta)
    s = randsample(samples, p, RngStream(cfg.seed, t.ndim + n))
    return unfold_columns(t, n, s.indices) * s.scales


def _amm_factor(t: np.ndarray, n: int, mu: int, cfg: AlgoConfig, info: dict) -> np.ndarray:
    ncols = t.size // t.shape[n]
    samples = _sample_count(n, ncols, cfg)
    c_prime = _sampled_columns(t, n, samples, cfg)
    width = _sketch_width(n, mu, t.shape[n], samples, cfg, info)
    g = gaussian_matrix(t.shape[n], width, RngStream(cfg.seed, n))
    c = gram_power_apply(c_prime, g, cfg.power, cfg.strategy)
    info.setdefault("samples", {})[n] = samples
    info.setdefault("sketch_width", {})[n] = width
    return leading_left_singular_vectors(c, mu)


def _project_core(a: np.ndarray, factors: list[np.ndarray]) -> np.ndarray:
    # shrink the modes with the strongest compression first to keep
    # intermediates small
    visit = sorted(range(a.ndim), key=lambda m: factors[m].shape[1] / a.shape[m])
    core = a
    for m in visit:
        core = mode_n_product(core, factors[m].T, m)
    return core


FactorRule = Callable[[np.ndarray, int, int, AlgoConfig, dict], np.ndarray]


def _independent(a, cfg: AlgoConfig, rule: FactorRule, name: str) -> TuckerDecomposition:
    a = as_tensor(a)
    info: dict = {"algorithm": name}
    ranks = _resolve_ranks(a.shape, cfg, info)
    factors = [rule(a, n, ranks[n], cfg, info) for n in range(a.ndim)]
    return TuckerDecomposition(_project_core(a, factors), factors, info)


def _sequential(a, cfg: AlgoConfig, rule: FactorRule, name: str) -> TuckerDecomposition:
    a = as_tensor(a)
    order = cfg.processing_order(a.ndim)
    info: dict = {"algorithm": name, "order": order}
    ranks = _resolve_ranks(a.shape, cfg, info)
    factors: list = [None] * a.ndim
    work = a
    for n in order:
        q = rule(work, n, ranks[n], cfg, info)
        factors[n] = q
        work = mode_n_product(work, q.T, n)
    return TuckerDecomposition(work, factors, info)


def _svd_rule(t, n, mu, cfg, info):
    return leading_left_singular_vectors(unfold(t, n), mu)


def _power_rule(t, n, mu, cfg, info):
    return _power_factor(t, n, mu, cfg, info, qr=False)


def _power_qr_rule(t, n, mu, cfg, info):
    return _power_factor(t, n, mu, cfg, info, qr=True)


# -- public algorithms ------------------------------------------------------


def t_hosvd(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    """Truncated HOSVD: each factor from the SVD of the full unfolding."""
    return _independent(a, cfg, _svd_rule, "thosvd")


def st_hosvd(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    """Sequentially truncated HOSVD in ``cfg.order``."""
    return _sequential(a, cfg, _svd_rule, "sthosvd")


def hooi(
    a: np.ndarray, cfg: AlgoConfig, init: TuckerDecomposition | None = None
) -> TuckerDecomposition:
    """Higher-order orthogonal iteration.

    Starts from ``init`` (ST-HOSVD when omitted) and sweeps over the modes,
    replacing each factor by the dominant subspace of the tensor projected on
    all other factors. Stops when the core norm changes by less than
    ``cfg.hooi_tol * |a|`` or after ``cfg.hooi_max_iter`` sweeps, and returns
    the iterate with the largest core norm (smallest error).
    """
    a = as_tensor(a)
    if init is None:
        init = st_hosvd(a, cfg)
    info: dict = {"algorithm": "hooi"}
    ranks = _resolve_ranks(a.shape, cfg, info)
    factors = [np.array(f, dtype=np.float64) for f in init.factors]
    if [f.shape for f in factors] != [(d, r) for d, r in zip(a.shape, ranks)]:
        raise ValueError("initial factors do not match the tensor and ranks")
    order = cfg.processing_order(a.ndim)
    norm_a = frobenius_norm(a)
    core = _project_core(a, factors)
    best = (frobenius_norm(core), core, list(factors))
    history = [best[0]]
    converged = False
    sweeps = 0
    while sweeps < cfg.hooi_max_iter:
        sweeps += 1
        for n in order:
            y = a
            for m in range(a.ndim):
                if m != n:
                    y = mode_n_product(y, factors[m].T, m)
            factors[n] = leading_left_singular_vectors(unfold(y, n), ranks[n])
        core = mode_n_product(y, factors[order[-1]].T, order[-1])
        core_norm = frobenius_norm(core)
        history.append(core_norm)
        if core_norm > best[0]:
            best = (core_norm, core, list(factors))
        if norm_a == 0 or abs(history[-1] - history[-2]) < cfg.hooi_tol * norm_a:
            converged = True
            break
    info.update(sweeps=sweeps, converged=converged, core_norms=history)
    return TuckerDecomposition(best[1], best[2], info)


def rand_thosvd_power(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    """Randomized T-HOSVD: per-mode Gaussian sketch of ``(A_(n) A_(n)^T)^q``."""
    return _independent(a, cfg, _power_rule, "alg1")


def rand_sthosvd_power(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    """Randomized ST-HOSVD: the power-scheme sketch applied to the shrinking tensor."""
    return _sequential(a, cfg, _power_rule, "alg2")


def rand_thosvd_amm(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    """Randomized T-HOSVD on a column-sampled unfolding ``A_(n) S_n``."""
    return _independent(a, cfg, _amm_factor, "alg4")


def rand_sthosvd_amm(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    """Sequential version of :func:`rand_thosvd_amm`.

    The default sample count shrinks as modes are processed because it is a
    fraction of the current tensor's unfolding width.
    """
    return _sequential(a, cfg, _amm_factor, "alg5")


def rand_thosvd_power_qr(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    return _independent(a, cfg, _power_qr_rule, "alg6")


def rand_sthosvd_power_qr(a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    return _sequential(a, cfg, _power_qr_rule, "alg7")


ALGORITHMS: dict[str, Callable[[np.ndarray, AlgoConfig], TuckerDecomposition]] = {
    "thosvd": t_hosvd,
    "sthosvd": st_hosvd,
    "hooi": hooi,
    "alg1": rand_thosvd_power,
    "alg2": rand_sthosvd_power,
    "alg4": rand_thosvd_amm,
    "alg5": rand_sthosvd_amm,
    "alg6": rand_thosvd_power_qr,
    "alg7": rand_sthosvd_power_qr,
}


def run_algorithm(name: str, a: np.ndarray, cfg: AlgoConfig) -> TuckerDecomposition:
    try:
        algo = ALGORITHMS[name]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}"
        ) from None
    return algo(a, cfg)

