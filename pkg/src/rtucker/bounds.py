"""Error-bound evaluators and deterministic inequality checks.

Probabilistic bounds are plain formula evaluations; whether they hold is a
question for trial ensembles. The deterministic checks (projection splitting,
sequential telescoping, energy identity, tail domination) raise
:class:`InequalityViolation` when they fail.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .algorithms import AlgoConfig, TuckerDecomposition, reconstruct
from .linalg import orthonormality_residual
from .tensor import as_tensor, frobenius_norm, mode_n_product, unfold

__all__ = [
    "InequalityViolation",
    "SpectralProfile",
    "BoundReport",
    "singular_values",
    "delta_tail",
    "delta_tail_power",
    "lambda_alg1",
    "gaussian_norm_tail",
    "gaussian_min_sv_tail",
    "probability_floor_mode",
    "probability_floor_total",
    "bound_alg1_mode",
    "bound_alg1_total",
    "bound_alg4_total",
    "amm_bound_nearly_optimal",
    "amm_bound_uniform",
    "sampled_gram_bounds",
    "multilinear_error_split",
    "sequential_error_split",
    "energy_identity",
    "compressed_tail_check",
    "verify_decomposition",
]

SLACK = 1e-9


class InequalityViolation(AssertionError):
    """A deterministic inequality that must always hold was violated."""


def singular_values(t: np.ndarray, n: int) -> np.ndarray:
    """Singular values of the mode-``n`` unfolding, descending."""
    return np.linalg.svd(unfold(t, n), compute_uv=False)


@dataclass
class SpectralProfile:
    """Per-mode singular values of a tensor plus the effective dimensions."""

    dims: tuple[int, ...]
    sigmas: list[np.ndarray]

    @classmethod
    def from_tensor(cls, a: np.ndarray) -> "SpectralProfile":
        a = as_tensor(a)
        return cls(tuple(a.shape), [singular_values(a, n) for n in range(a.ndim)])

    def other(self, n: int) -> int:
        return math.prod(self.dims) // self.dims[n]

    def effective_dim(self, n: int) -> int:
        """``min(I_n, prod_{m != n} I_m)``, the length of the mode-``n`` spectrum."""
        return min(self.dims[n], self.other(n))

    def sampled_dim(self, n: int, samples: int) -> int:
        return min(self.dims[n], samples)


def _check_mu(sigma: np.ndarray, mu: int) -> None:
    if not 0 <= mu <= sigma.size:
        raise ValueError(f"mu={mu} out of range for a spectrum of length {sigma.size}")


def delta_tail(sigma: Sequence[float], mu: int) -> float:
    """``sqrt(sum_{k > mu} sigma_k^2)``.

    >>> delta_tail([3.0, 2.0, 1.0], 2)
    1.0
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    _check_mu(sigma, mu)
    return float(np.sqrt(np.sum(sigma[mu:] ** 2)))


def delta_tail_power(sigma: Sequence[float], mu: int, q: int) -> float:
    """``sqrt(sum_{k > mu} sigma_k^(4q))``, the tail seen by the power scheme."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    sigma = np.asarray(sigma, dtype=np.float64)
    _check_mu(sigma, mu)
    return float(np.sqrt(np.sum(sigma[mu:] ** (4 * q))))


def _check_beta_gamma(beta: float, gamma: float) -> None:
    if beta <= 1 or gamma <= 1:
        raise ValueError(f"beta and gamma must exceed 1, got beta={beta}, gamma={gamma}")


def lambda_alg1(
    profile: SpectralProfile,
    n: int,
    mu: int,
    K: int,
    q: int,
    beta: float = 2.0,
    gamma: float = 2.0,
) -> float:
    """Amplification factor multiplying the power tail in the per-mode bound."""
    _check_beta_gamma(beta, gamma)
    sigma = profile.sigmas[n]
    if not 1 <= mu <= sigma.size:
        raise ValueError(f"mu={mu} out of range for a spectrum of length {sigma.size}")
    s_mu = sigma[mu - 1]
    if s_mu <= 0:
        raise ValueError(f"sigma_{mu} of mode {n} is zero; the bound is undefined")
    width = max(profile.effective_dim(n) - mu, mu + K)
    numerator = (math.sqrt(width) + math.sqrt(profile.dims[n])) * math.sqrt(2 * (mu + K))
    return numerator * gamma * beta / s_mu ** (2 * q - 1)


def gaussian_norm_tail(m: int, gamma: float) -> float:
    """Failure probability term for a Gaussian norm exceeding ``gamma * sqrt(2m)``."""
    g2 = gamma * gamma
    return (2 * g2 / math.exp(g2 - 1)) ** 2 / (4 * (g2 - 1) * math.sqrt(math.pi * m * g2))


def gaussian_min_sv_tail(K: int) -> float:
    """Failure probability term for the smallest singular value with ``K`` oversampling."""
    return (math.e / (K + 1)) ** (K + 1) / math.sqrt(2 * math.pi * (K + 1))


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _mode_failure(dim: int, width_dim: int, mu: int, K: int, gamma: float) -> float:
    return (
        gaussian_norm_tail(max(width_dim - mu, mu + K), gamma)
        + gaussian_min_sv_tail(K)
        + gaussian_norm_tail(dim, gamma)
    )


def probability_floor_mode(
    profile: SpectralProfile, n: int, mu: int, K: int, gamma: float = 2.0
) -> float:
    """Success-probability floor of the single-mode bound, clamped to ``[0, 1]``."""
    fail = _mode_failure(profile.dims[n], profile.effective_dim(n), mu, K, gamma)
    return _clamp01(1.0 - fail)


def probability_floor_total(
    profile: SpectralProfile, ranks: Sequence[int], K: int, gamma: float = 2.0
) -> float:
    """Union-bound floor over all modes, clamped to ``[0, 1]``."""
    fail = sum(
        _mode_failure(profile.dims[n], profile.effective_dim(n), mu, K, gamma)
        for n, mu in enumerate(ranks)
    )
    return _clamp01(1.0 - fail)


def bound_alg1_mode(
    profile: SpectralProfile,
    n: int,
    mu: int,
    K: int,
    q: int,
    beta: float = 2.0,
    gamma: float = 2.0,
) -> float:
    """Bound on ``|A_(n) - Q Q^T A_(n)|_F`` for a power-scheme factor."""
    sigma = profile.sigmas[n]
    lam = lambda_alg1(profile, n, mu, K, q, beta, gamma)
    return 2.0 * (lam * delta_tail_power(sigma, mu, q) + delta_tail(sigma, mu))


@dataclass
class BoundReport:
    """Observed error against a bound and the probability it should hold with.

    ``squared`` tells whether ``bound`` and ``observed_error`` are squared
    Frobenius errors. ``tolerance`` absorbs rounding when both sides are
    essentially zero.
    """

    bound: float
    probability_floor: float
    observed_error: float | None = None
    squared: bool = False
    tolerance: float = 0.0
    parameters: dict = field(default_factory=dict)
    per_mode: list = field(default_factory=list)

    def __post_init__(self):
        if not (math.isfinite(self.bound) and self.bound >= 0):
            raise ValueError(f"bound must be finite and nonnegative, got {self.bound}")

    @property
    def holds(self) -> bool | None:
        if self.observed_error is None:
            return None
        return self.observed_error <= self.bound + self.tolerance

    def to_dict(self) -> dict:
        d = asdict(self)
        d["holds"] = self.holds
        return _jsonable(d)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


def _observed(a: np.ndarray, d: TuckerDecomposition | None) -> float | None:
    return None if d is None else frobenius_norm(a - reconstruct(d))


def bound_alg1_total(
    a: np.ndarray,
    cfg: AlgoConfig,
    beta: float = 2.0,
    gamma: float = 2.0,
    decomposition: TuckerDecomposition | None = None,
    profile: SpectralProfile | None = None,
) -> BoundReport:
    """Bound on ``|a - a_hat|_F`` for the power-scheme T-HOSVD.

    The bound sums the per-mode bounds (times two); its floor is the union of
    all per-mode failure terms. Pass ``decomposition`` to record the observed
    error alongside.
    """
    a = as_tensor(a)
    profile = profile or SpectralProfile.from_tensor(a)
    ranks = [min(mu, d) for mu, d in zip(cfg.ranks, a.shape)]
    K, q = cfg.oversampling, cfg.power
    per_mode = []
    total = 0.0
    for n, mu in enumerate(ranks):
        sigma = profile.sigmas[n]
        lam = lambda_alg1(profile, n, mu, K, q, beta, gamma)
        tail_q = delta_tail_power(sigma, mu, q)
        tail = delta_tail(sigma, mu)
        total += lam * tail_q + tail
        per_mode.append(
            {
                "mode": n,
                "lambda": lam,
                "tail": tail,
                "power_tail": tail_q,
                "bound": 2.0 * (lam * tail_q + tail),
                "probability_floor": probability_floor_mode(profile, n, mu, K, gamma),
            }
        )
    return BoundReport(
        bound=2.0 * total,
        probability_floor=probability_floor_total(profile, ranks, K, gamma),
        observed_error=_observed(a, decomposition),
        tolerance=1e-10 * frobenius_norm(a),
        parameters={"beta": beta, "gamma": gamma, "K": K, "q": q, "ranks": ranks},
        per_mode=per_mode,
    )


def _eta(delta: float) -> float:
    _check_delta(delta)
    return 1.0 + math.sqrt((8.0 / delta) * math.log(1.0 / delta))


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def amm_bound_nearly_optimal(
    a: np.ndarray, b: np.ndarray, K: int, beta: float, delta: float
) -> float:
    """``eta / sqrt(beta K) * |A|_F |B|_F`` with ``eta = 1 + sqrt((8/delta) log(1/delta))``.

    Holds with probability at least ``1 - delta`` when every sampling weight is
    at least ``beta`` times its optimal value.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if K < 1:
        raise ValueError("K must be >= 1")
    return _eta(delta) / math.sqrt(beta * K) * frobenius_norm(a) * frobenius_norm(b)


def amm_bound_uniform(a: np.ndarray, b: np.ndarray, K: int, delta: float) -> float:
    """Error bound for uniform column sampling, holding with probability ``1 - delta``.

    ``sqrt(I/K) * sqrt(sum_i |A(:,i)|^2 |B(i,:)|^2) + g`` where
    ``g = 1 + I / sqrt(K) * sqrt(8 log(1/delta)) * max_i |A(:,i)| |B(i,:)|``
    and ``I`` is the inner dimension.
    """
    _check_delta(delta)
    if K < 1:
        raise ValueError("K must be >= 1")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    inner = a.shape[1]
    prods = np.linalg.norm(a, axis=0) * np.linalg.norm(b, axis=1)
    g = 1.0 + inner / math.sqrt(K) * math.sqrt(8.0 * math.log(1.0 / delta)) * prods.max()
    return math.sqrt(inner / K) * math.sqrt(float(np.sum(prods**2))) + g


def sampled_gram_bounds(
    a_unfold: np.ndarray,
    samples: int,
    delta: float,
    regime: str = "uniform",
    beta: float = 0.5,
    effective_dim: int | None = None,
) -> dict:
    """Bounds on ``|A A^T - C' C'^T|_F`` when ``C' = A S`` samples ``samples`` columns.

    For uniform sampling two variants are returned: ``"displayed"`` scales
    ``|A|_F^2`` by ``1 + sqrt(I'/T) + I'/sqrt(T) sqrt(8 log(1/delta))`` with
    ``I' = min(rows, cols)``; ``"product"`` applies the uniform product bound
    to ``A @ A.T`` directly. The first uses ``I'`` where the second uses the
    number of columns, so they can differ by orders of magnitude.
    """
    a_unfold = np.asarray(a_unfold, dtype=np.float64)
    sq = frobenius_norm(a_unfold) ** 2
    if regime.replace("-", "_") == "nearly_optimal":
        return {"nearly_optimal": _eta(delta) / math.sqrt(beta * samples) * sq}
    _check_delta(delta)
    i_eff = effective_dim if effective_dim is not None else min(a_unfold.shape)
    phi = 1 + math.sqrt(i_eff / samples) + i_eff / math.sqrt(samples) * math.sqrt(
        8 * math.log(1 / delta)
    )
    return {
        "displayed": phi * sq,
        "product": amm_bound_uniform(a_unfold, a_unfold.T, samples, delta),
    }


def _numerical_rank(sigma: np.ndarray) -> int:
    if sigma.size == 0 or sigma[0] == 0:
        return 0
    return int(np.sum(sigma > sigma[0] * sigma.size * np.finfo(float).eps))


def bound_alg4_total(
    a: np.ndarray,
    cfg: AlgoConfig,
    beta: float = 2.0,
    gamma: float = 2.0,
    delta: float = 0.1,
    decomposition: TuckerDecomposition | None = None,
    profile: SpectralProfile | None = None,
) -> BoundReport:
    """Bound on the squared error of the column-sampled T-HOSVD with ``q = 1``.

    ``sum_n rank(A_(n)) * (2 (1 + lambda_n) I_n tail_n + phi_n |a|_F^2)``, where
    ``lambda_n`` drops the singular-value denominator and uses
    ``min(I_n, T_n)`` as the effective dimension, and ``phi_n`` is the sampled
    Gram factor for the configured probability regime.
    """
    a = as_tensor(a)
    _check_beta_gamma(beta, gamma)
    _check_delta(delta)
    profile = profile or SpectralProfile.from_tensor(a)
    ranks = [min(mu, d) for mu, d in zip(cfg.ranks, a.shape)]
    K = cfg.oversampling
    eta = _eta(delta)
    sq_norm = frobenius_norm(a) ** 2
    regime = cfg.regime.replace("-", "_")
    per_mode = []
    total = 0.0
    fail = 0.0
    for n, mu in enumerate(ranks):
        sigma = profile.sigmas[n]
        samples = cfg.samples[n] if cfg.samples else max(
            1, math.ceil(round(cfg.alpha * profile.other(n), 9))
        )
        i2 = profile.sampled_dim(n, samples)
        lam = (
            (math.sqrt(max(i2 - mu, mu + K)) + math.sqrt(profile.dims[n]))
            * math.sqrt(2 * (mu + K))
            * gamma
            * beta
        )
        if regime == "uniform":
            i1 = profile.effective_dim(n)
            phi = 1 + math.sqrt(i1 / samples) + i1 / math.sqrt(samples) * math.sqrt(
                8 * math.log(1 / delta)
            )
        else:
            phi = eta / math.sqrt(cfg.beta * samples)
        rank = _numerical_rank(sigma)
        tail = delta_tail_power(sigma, mu, 1)
        term = rank * (2 * (1 + lam) * profile.dims[n] * tail + phi * sq_norm)
        total += term
        fail += _mode_failure(profile.dims[n], i2, mu, K, gamma) + delta
        per_mode.append(
            {"mode": n, "samples": samples, "lambda": lam, "phi": phi, "rank": rank,
             "power_tail": tail, "bound": term}
        )
    observed = _observed(a, decomposition)
    return BoundReport(
        bound=total,
        probability_floor=_clamp01(1.0 - fail),
        observed_error=None if observed is None else observed**2,
        squared=True,
        tolerance=1e-10 * sq_norm,
        parameters={"beta": beta, "gamma": gamma, "delta": delta, "eta": eta, "K": K,
                    "regime": regime, "ranks": ranks},
        per_mode=per_mode,
    )


# -- deterministic inequalities ----------------------------------------------


def _check_orthonormal(factors: Sequence[np.ndarray], tol: float = 1e-8) -> None:
    for n, q in enumerate(factors):
        res = orthonormality_residual(q)
        if res > tol:
            raise ValueError(f"factor {n} is not orthonormal (residual {res:.3g})")


def _projection_residual_sq(t: np.ndarray, q: np.ndarray, n: int) -> float:
    t_n = unfold(t, n)
    r = t_n - q @ (q.T @ t_n)
    return float(np.sum(r * r))


def _project_all(a: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    out = a
    for n, q in enumerate(factors):
        out = mode_n_product(out, q @ q.T, n)
    return out


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise InequalityViolation(message)


def multilinear_error_split(
    a: np.ndarray, factors: Sequence[np.ndarray]
) -> tuple[float, np.ndarray]:
    """Total squared error of the multilinear projection and its per-mode terms.

    The total never exceeds the sum of the single-mode residuals
    ``|a - a x_n Q_n Q_n^T|_F^2``; a violation beyond ``1e-9 |a|^2`` raises.
    """
    a = as_tensor(a)
    _check_orthonormal(factors)
    r = a - _project_all(a, factors)
    total = float(np.sum(r * r))
    per_mode = np.array(
        [_projection_residual_sq(a, q, n) for n, q in enumerate(factors)]
    )
    scale = SLACK * max(frobenius_norm(a) ** 2, 1.0)
    _require(
        total <= per_mode.sum() + scale,
        f"total {total!r} exceeds sum of single-mode residuals {per_mode.sum()!r}",
    )
    return total, per_mode


def sequential_error_split(
    a: np.ndarray, factors: Sequence[np.ndarray], order: Sequence[int] | None = None
) -> tuple[float, np.ndarray]:
    """Total squared error and the sequential residuals in processing ``order``.

    Step ``k`` measures what mode ``order[k]`` discards from the tensor already
    compressed by the earlier modes.
    """
    a = as_tensor(a)
    _check_orthonormal(factors)
    order = tuple(range(a.ndim)) if order is None else tuple(order)
    if sorted(order) != list(range(a.ndim)):
        raise ValueError(f"order {order} is not a permutation of the modes")
    r = a - _project_all(a, factors)
    total = float(np.sum(r * r))
    steps = []
    work = a
    for n in order:
        steps.append(_projection_residual_sq(work, factors[n], n))
        work = mode_n_product(work, factors[n].T, n)
    steps = np.array(steps)
    scale = SLACK * max(frobenius_norm(a) ** 2, 1.0)
    _require(
        total <= steps.sum() + scale,
        f"total {total!r} exceeds sum of sequential residuals {steps.sum()!r}",
    )
    return total, steps


def energy_identity(a: np.ndarray, d: TuckerDecomposition, rtol: float = 1e-8) -> tuple[float, float]:
    """``|a - a_hat|^2`` and ``|a|^2 - |core|^2``; they must agree to ``rtol * |a|^2``.

    Only valid when the core is the projection of ``a`` on the factors, which
    is the case for every algorithm in this package.
    """
    a = as_tensor(a)
    r = a - reconstruct(d)
    lhs = float(np.sum(r * r))
    na = frobenius_norm(a) ** 2
    rhs = na - frobenius_norm(d.core) ** 2
    _require(
        abs(lhs - rhs) <= rtol * max(na, 1.0),
        f"energy identity off: {lhs!r} vs {rhs!r}",
    )
    return lhs, rhs


def compressed_tail_check(
    a: np.ndarray, partial_factors: Mapping[int, np.ndarray], n: int, mu: int
) -> tuple[float, float]:
    """Tail energy beyond ``mu`` of mode ``n`` after and before compressing other modes.

    ``partial_factors`` maps mode indices (other than ``n``) to orthonormal
    factors; ``B = a x_m Q_m^T`` over those modes. Returns ``(tail(B), tail(a))``
    and raises if the first exceeds the second.
    """
    a = as_tensor(a)
    if n in partial_factors:
        raise ValueError(f"mode {n} must not be compressed")
    _check_orthonormal(list(partial_factors.values()))
    b = a
    for m, q in partial_factors.items():
        b = mode_n_product(b, q.T, m)
    sb = singular_values(b, n)
    sa = singular_values(a, n)
    lhs = float(np.sum(sb[mu:] ** 2))
    rhs = float(np.sum(sa[mu:] ** 2))
    _require(
        lhs <= rhs + SLACK * max(frobenius_norm(a) ** 2, 1.0),
        f"compressed tail {lhs!r} exceeds original tail {rhs!r}",
    )
    return lhs, rhs


def verify_decomposition(
    a: np.ndarray, d: TuckerDecomposition, order: Sequence[int] | None = None
) -> dict:
    """Run every deterministic check on one decomposition; raises on failure."""
    total, per_mode = multilinear_error_split(a, d.factors)
    _, steps = sequential_error_split(a, d.factors, order)
    lhs, rhs = energy_identity(a, d)
    return {
        "sq_error": total,
        "single_mode_terms": per_mode.tolist(),
        "sequential_terms": steps.tolist(),
        "energy_lhs": lhs,
        "energy_rhs": rhs,
    }
