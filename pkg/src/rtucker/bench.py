"""Experiment harness: algorithm sweeps, CSV result rows and bound verification."""

from __future__ import annotations

import csv
import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .algorithms import ALGORITHMS, AlgoConfig, run_algorithm, reconstruct, relative_error
from .bounds import (
    InequalityViolation,
    SpectralProfile,
    amm_bound_nearly_optimal,
    amm_bound_uniform,
    bound_alg1_mode,
    bound_alg1_total,
    probability_floor_mode,
    verify_decomposition,
)
from .datagen import GeneratorSpec, generate, load_tensor
from .linalg import orthonormality_residual
from .sketching import RngStream, basic_matrix_multiplication, make_probabilities
from .tensor import unfold

__all__ = [
    "THREADS_ENV",
    "CSV_COLUMNS",
    "ResultRow",
    "ExperimentConfig",
    "kernel_threads",
    "timed_run",
    "run_benchmark",
    "write_csv",
    "read_csv",
    "verify_bounds",
    "frequency_slack",
]

THREADS_ENV = "RTUCKER_NUM_THREADS"

CSV_COLUMNS = (
    "algorithm", "dims", "ranks", "K", "q", "alpha", "T_n", "regime",
    "seed", "RE", "FIT", "wall_time_ms", "rerun", "error",
)

SAMPLING_ALGORITHMS = ("alg4", "alg5")


@contextmanager
def kernel_threads(limit: int | None = None):
    """Cap BLAS threads at ``limit``, else at ``$RTUCKER_NUM_THREADS`` if set."""
    if limit is None:
        env = os.environ.get(THREADS_ENV)
        limit = int(env) if env else None
    if limit is None:
        yield
        return
    with threadpool_limits(limits=limit):
        yield


def _join(values: Iterable) -> str:
    return "x".join(str(v) for v in values)


def _split(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split("x")) if text else ()


@dataclass
class ResultRow:
    algorithm: str
    dims: tuple[int, ...]
    ranks: tuple[int, ...]
    K: int
    q: int
    alpha: float
    T_n: tuple[int, ...]
    regime: str
    seed: int
    RE: float
    FIT: float
    wall_time_ms: float
    rerun: int
    error: str = ""

    def to_csv(self) -> list[str]:
        def num(x: float) -> str:
            return format(x, ".17g")

        return [
            self.algorithm, _join(self.dims), _join(self.ranks), str(self.K), str(self.q),
            num(self.alpha), _join(self.T_n), self.regime, str(self.seed),
            num(self.RE), num(self.FIT), num(self.wall_time_ms), str(self.rerun), self.error,
        ]

    @classmethod
    def from_csv(cls, rec: dict) -> "ResultRow":
        return cls(
            algorithm=rec["algorithm"], dims=_split(rec["dims"]), ranks=_split(rec["ranks"]),
            K=int(rec["K"]), q=int(rec["q"]), alpha=float(rec["alpha"]),
            T_n=_split(rec["T_n"]), regime=rec["regime"], seed=int(rec["seed"]),
            RE=float(rec["RE"]), FIT=float(rec["FIT"]),
            wall_time_ms=float(rec["wall_time_ms"]), rerun=int(rec["rerun"]),
            error=rec.get("error", ""),
        )


@dataclass
class ExperimentConfig:
    """A sweep over algorithms x ranks x seeds, each repeated ``reps`` times.

    Exactly one of ``generator`` and ``input`` names the tensor.
    """

    algorithms: Sequence[str]
    ranks: Sequence[Sequence[int]]
    generator: GeneratorSpec | None = None
    input: str | None = None
    seeds: Sequence[int] = (0,)
    reps: int = 1
    base: dict = field(default_factory=dict)
    timed: bool = False
    verify: bool = False

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {name!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if (self.generator is None) == (self.input is None):
            raise ValueError("give exactly one of generator and input")
        if isinstance(self.generator, dict):
            self.generator = GeneratorSpec.from_dict(self.generator)
        self.ranks = [tuple(int(r) for r in rk) for rk in self.ranks]
        if not self.ranks:
            raise ValueError("at least one rank vector is required")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "mu_sweep" in d:
            # shorthand: [start, stop, step] applied equally to every mode
            start, stop, step = d.pop("mu_sweep")
            order = d.pop("order_n", None)
            if order is None:
                raise ValueError("mu_sweep needs order_n, the number of modes")
            d["ranks"] = [[mu] * order for mu in range(start, stop + 1, step)]
        return cls(**d)

    def tensor(self) -> np.ndarray:
        if self.generator is not None:
            return generate(self.generator)
        return load_tensor(self.input)


def timed_run(name: str, a: np.ndarray, cfg: AlgoConfig):
    """Run one algorithm; returns the decomposition and wall time in ms."""
    start = time.perf_counter()
    d = run_algorithm(name, a, cfg)
    return d, (time.perf_counter() - start) * 1e3


def _sample_counts(name: str, d) -> tuple[int, ...]:
    if name not in SAMPLING_ALGORITHMS:
        return ()
    samples = d.info.get("samples", {})
    return tuple(samples[n] for n in sorted(samples))


def run_benchmark(exp: ExperimentConfig, a: np.ndarray | None = None) -> list[ResultRow]:
    """One row per (algorithm, ranks, seed, rerun); failures become error rows.

    With ``exp.verify`` every decomposition also passes through the
    deterministic inequality checks and a violation is recorded as the row's
    error. Timed sweeps run with a single kernel thread.
    """
    a = exp.tensor() if a is None else a
    rows = []
    limit = 1 if exp.timed else None
    with kernel_threads(limit):
        for name in exp.algorithms:
            for ranks in exp.ranks:
                for seed in exp.seeds:
                    base = {k: v for k, v in exp.base.items() if k not in ("ranks", "seed")}
                    cfg = AlgoConfig(ranks=ranks, seed=seed, **base)
                    for rerun in range(exp.reps):
                        rows.append(_one_row(name, a, cfg, rerun, exp.verify))
    return rows


def _one_row(name: str, a: np.ndarray, cfg: AlgoConfig, rerun: int, verify: bool) -> ResultRow:
    row = ResultRow(
        algorithm=name, dims=a.shape, ranks=cfg.ranks, K=cfg.oversampling, q=cfg.power,
        alpha=cfg.alpha, T_n=(), regime=cfg.regime, seed=cfg.seed,
        RE=math.nan, FIT=math.nan, wall_time_ms=math.nan, rerun=rerun,
    )
    try:
        d, ms = timed_run(name, a, cfg)
        re = relative_error(a, reconstruct(d))
        row = replace(row, RE=re, FIT=1.0 - re, wall_time_ms=ms, T_n=_sample_counts(name, d))
        if verify:
            verify_decomposition(a, d, d.info.get("order"))
    except Exception as exc:  # a failed row must not stop the sweep
        row = replace(row, error=f"{type(exc).__name__}: {exc}")
    return row


def write_csv(path, rows: Sequence[ResultRow], append: bool = False) -> None:
    exists = append and os.path.exists(path) and os.path.getsize(path) > 0
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.writer(fh)
        if not exists:
            w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow(row.to_csv())


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        return [ResultRow.from_csv(rec) for rec in csv.DictReader(fh)]


def frequency_slack(p: float, trials: int) -> float:
    """Three binomial standard deviations at rate ``p``."""
    return 3.0 * math.sqrt(p * (1.0 - p) / trials)


def _amm_violations(a, b, K, p, bound, trials, seed) -> int:
    exact = a @ b
    bad = 0
    for t in range(trials):
        c, r = basic_matrix_multiplication(a, b, K, p, RngStream(seed, t))
        bad += np.linalg.norm(exact - c @ r) > bound
    return int(bad)


def verify_bounds(
    a: np.ndarray,
    cfg: AlgoConfig,
    trials: int = 100,
    beta: float = 2.0,
    gamma: float = 2.0,
    delta: float = 0.1,
    amm_samples: int | None = None,
    algorithms: Sequence[str] = tuple(ALGORITHMS),
) -> dict:
    """Empirical check of the probabilistic bounds plus the deterministic inequalities.

    * per-mode power-scheme bound: fraction of ``trials`` seeded runs whose
      single-mode error stays under the bound, against its probability floor;
    * sampled products of ``A_(1) @ A_(1)^T``: violation rates of the
      nearly-optimal and uniform bounds against ``delta``;
    * deterministic checks on one run of each algorithm.

    ``report["deterministic_ok"]`` is false if any deterministic check failed.
    """
    profile = SpectralProfile.from_tensor(a)
    ranks = [min(mu, d) for mu, d in zip(cfg.ranks, a.shape)]
    K, q = cfg.oversampling, cfg.power
    mode_hits = np.zeros(a.ndim, dtype=int)
    total_hits = 0
    total = bound_alg1_total(a, cfg, beta, gamma, profile=profile)
    mode_bounds = [bound_alg1_mode(profile, n, mu, K, q, beta, gamma) for n, mu in enumerate(ranks)]
    for t in range(trials):
        d = run_algorithm("alg1", a, replace(cfg, seed=cfg.seed + t))
        for n, qn in enumerate(d.factors):
            a_n = unfold(a, n)
            err = np.linalg.norm(a_n - qn @ (qn.T @ a_n))
            mode_hits[n] += err <= mode_bounds[n] + 1e-10 * np.linalg.norm(a_n)
        total_hits += np.linalg.norm(a - reconstruct(d)) <= total.bound + total.tolerance
    power_bound = {
        "trials": trials,
        "per_mode": [
            {
                "mode": n,
                "bound": mode_bounds[n],
                "frequency": mode_hits[n] / trials,
                "probability_floor": probability_floor_mode(profile, n, ranks[n], K, gamma),
            }
            for n in range(a.ndim)
        ],
        "total": {
            "bound": total.bound,
            "frequency": total_hits / trials,
            "probability_floor": total.probability_floor,
        },
    }
    for entry in power_bound["per_mode"] + [power_bound["total"]]:
        entry["ok"] = bool(entry["frequency"] >= entry["probability_floor"] - 0.05)

    mat = unfold(a, 0)
    samples = amm_samples or max(1, math.ceil(cfg.alpha * mat.shape[1]))
    limit = delta + frequency_slack(delta, trials)
    amm = {}
    for regime, bound in (
        ("nearly_optimal", amm_bound_nearly_optimal(mat, mat.T, samples, cfg.beta, delta)),
        ("uniform", amm_bound_uniform(mat, mat.T, samples, delta)),
    ):
        p = make_probabilities(mat, mat.T, regime, cfg.beta)
        bad = _amm_violations(mat, mat.T, samples, p, bound, trials, cfg.seed)
        amm[regime] = {
            "samples": samples,
            "bound": bound,
            "violation_frequency": bad / trials,
            "limit": limit,
            "ok": bad / trials <= limit,
        }

    deterministic = {}
    ok = True
    for name in algorithms:
        try:
            d = run_algorithm(name, a, cfg)
            deterministic[name] = verify_decomposition(a, d, d.info.get("order"))
            deterministic[name]["ok"] = True
        except InequalityViolation as exc:
            deterministic[name] = {"ok": False, "error": str(exc)}
            ok = False
    return {
        "dims": list(a.shape),
        "ranks": ranks,
        "parameters": {"K": K, "q": q, "beta": beta, "gamma": gamma, "delta": delta},
        "power_bound": power_bound,
        "amm": amm,
        "deterministic": deterministic,
        "deterministic_ok": ok,
    }


def orthonormality_report(d) -> list[float]:
    return [orthonormality_residual(f) for f in d.factors]
