"""Synthetic test tensors, SNR arithmetic and the TNSR binary file format."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .sketching import RngStream
from .tensor import as_tensor, fold, frobenius_norm, inner_product, mode_n_product

__all__ = [
    "GeneratorSpec",
    "desk_spec",
    "generate",
    "gen_tucker_noise",
    "gen_sparse_cp",
    "gen_lowrank_noise",
    "gen_diag_decay",
    "gen_order4",
    "diag_decay_values",
    "cp_tensor",
    "snr_db",
    "noise_level_for_snr",
    "save_tensor",
    "load_tensor",
    "TensorFormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedFileError",
]

KINDS = ("tucker_noise", "sparse_cp", "lowrank_noise", "diag_decay", "order4_noise", "order4_sparse")


@dataclass
class GeneratorSpec:
    """Everything needed to regenerate a synthetic tensor.

    Fields that a kind does not use are ignored.

    gamma
        Relative noise scale of ``tucker_noise``.
    noise_denominator
        ``"scaled"`` divides the noise by ``sqrt(prod(2/3 * I_n))``;
        ``"literal"`` uses the fixed ``sqrt(400**3)`` calibrated for 600^3 tensors.
    snr
        Target SNR in dB for ``lowrank_noise``/``order4_noise``; ``None`` means
        no noise.
    snr_reference
        ``"clean"`` measures signal energy on the noiseless tensor,
        ``"noisy"`` on the noisy one.
    split, weight, decay
        Sparse CP: the first ``split`` terms get weight ``weight / i**decay``,
        the rest ``1 / i**decay``. Diagonal decay: ``split`` ones, then
        ``(i - split + 1) ** -decay``.
    """

    kind: str
    dims: Sequence[int]
    core_dims: Sequence[int] | None = None
    gamma: float = 0.0
    noise_denominator: str = "scaled"
    snr: float | None = None
    snr_reference: str = "clean"
    density: float = 0.05
    split: int = 20
    weight: float = 1000.0
    decay: float = 2.0
    rotate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        self.dims = tuple(int(d) for d in self.dims)
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"dims must be positive, got {self.dims}")
        if self.kind.startswith("order4") and len(self.dims) != 4:
            raise ValueError(f"{self.kind} needs four dimensions, got {self.dims}")
        if self.core_dims is not None:
            self.core_dims = tuple(int(r) for r in self.core_dims)
            if len(self.core_dims) != len(self.dims):
                raise ValueError("core_dims and dims have different lengths")
            if any(r < 1 or r > d for r, d in zip(self.core_dims, self.dims)):
                raise ValueError(f"core {self.core_dims} does not fit in {self.dims}")
        if not 0 < self.density <= 1:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.noise_denominator not in ("scaled", "literal"):
            raise ValueError(f"unknown noise denominator {self.noise_denominator!r}")
        if self.snr_reference not in ("clean", "noisy"):
            raise ValueError(f"unknown SNR reference {self.snr_reference!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims)
        if self.core_dims is not None:
            d["core_dims"] = list(self.core_dims)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown generator fields: {sorted(unknown)}")
        return cls(**d)

    def require_core(self) -> tuple[int, ...]:
        if self.core_dims is None:
            raise ValueError(f"{self.kind} needs core_dims")
        return self.core_dims


_DESK = {
    "tucker_noise": dict(dims=(60, 60, 60), core_dims=(10, 10, 10), gamma=0.001),
    "sparse_cp": dict(dims=(120, 120, 120), split=20, weight=1000.0),
    "lowrank_noise": dict(dims=(60, 60, 60), core_dims=(10, 10, 10), snr=10.0),
    "diag_decay": dict(dims=(120, 120, 120), split=20),
    "order4_noise": dict(dims=(40, 40, 40, 40), core_dims=(8, 8, 8, 8), snr=10.0),
    "order4_sparse": dict(dims=(40, 40, 40, 40), split=10, weight=1000.0),
}


def desk_spec(kind: str, **overrides) -> GeneratorSpec:
    """Laptop-sized default spec for ``kind``; keyword arguments override fields."""
    if kind not in _DESK:
        raise ValueError(f"unknown generator kind {kind!r}")
    return GeneratorSpec(kind=kind, **{**_DESK[kind], **overrides})


def _orthonormal_basis(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    q, _ = np.linalg.qr(rng.generator().standard_normal((rows, cols)))
    return q


def _tucker(core: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    out = core
    for n, f in enumerate(factors):
        out = mode_n_product(out, f, n)
    return out


def _noise_denominator(spec: GeneratorSpec) -> float:
    if spec.noise_denominator == "literal":
        return math.sqrt(400.0**3)
    return math.sqrt(math.prod(2.0 * d / 3.0 for d in spec.dims))


def gen_tucker_noise(spec: GeneratorSpec, return_parts: bool = False):
    """Uniform-core Tucker tensor plus scaled Gaussian noise.

    ``B = C x_1 A_1 ... x_N A_N`` with ``C ~ U(0,1)`` and orthonormal ``A_n``;
    the result is ``B + gamma |B|_F / denom * E`` with ``E`` standard normal.
    With ``return_parts`` the triple ``(tensor, B, noise_term)`` is returned.
    """
    core_dims = spec.require_core()
    n_modes = len(spec.dims)
    core = RngStream(spec.seed, 0).generator().random(core_dims)
    factors = [
        _orthonormal_basis(d, r, RngStream(spec.seed, 1 + n))
        for n, (d, r) in enumerate(zip(spec.dims, core_dims))
    ]
    clean = _tucker(core, factors)
    if spec.gamma == 0:
        noise = np.zeros_like(clean)
    else:
        e = RngStream(spec.seed, 1 + n_modes).generator().standard_normal(spec.dims)
        noise = (spec.gamma * frobenius_norm(clean) / _noise_denominator(spec)) * e
    tensor = clean + noise
    return (tensor, clean, noise) if return_parts else tensor


def _sparse_vectors(size: int, count: int, density: float, rng: np.random.Generator) -> np.ndarray:
    nnz = max(1, round(density * size))
    out = np.zeros((size, count))
    for r in range(count):
        support = rng.choice(size, nnz, replace=False)
        out[support, r] = rng.random(nnz)
    return out


def cp_tensor(weights: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_r weights[r] * f_1[:, r] o f_2[:, r] o ... o f_N[:, r]``."""
    weights = np.asarray(weights, dtype=np.float64)
    dims = tuple(f.shape[0] for f in factors)
    if len(factors) == 1:
        return factors[0] @ weights
    # rows of kr run over modes 2..N with mode 2 fastest, matching unfold(., 0)
    kr = factors[1]
    for f in factors[2:]:
        kr = (f[:, None, :] * kr[None, :, :]).reshape(-1, len(weights))
    return fold((factors[0] * weights) @ kr.T, 0, dims)


def _cp_weights(spec: GeneratorSpec, terms: int) -> np.ndarray:
    i = np.arange(1, terms + 1, dtype=np.float64)
    w = i ** -spec.decay
    w[: spec.split] *= spec.weight
    return w


def gen_sparse_cp(spec: GeneratorSpec) -> np.ndarray:
    """Sum of ``min(dims)`` sparse rank-one terms with a heavy leading group.

    Each factor vector has ``round(density * I_n)`` nonzeros (at least one)
    drawn from ``U(0, 1)`` on a uniformly random support.
    """
    terms = min(spec.dims)
    factors = [
        _sparse_vectors(d, terms, spec.density, RngStream(spec.seed, n).generator())
        for n, d in enumerate(spec.dims)
    ]
    return cp_tensor(_cp_weights(spec, terms), factors)


def snr_db(a: np.ndarray, noise: np.ndarray) -> float:
    """``10 log10(|a|^2 / |noise|^2)``."""
    nn = frobenius_norm(noise)
    if nn == 0:
        raise ValueError("SNR is undefined for zero noise")
    return 10.0 * math.log10(frobenius_norm(a) ** 2 / nn**2)


def noise_level_for_snr(
    clean: np.ndarray, noise: np.ndarray, target_db: float, reference: str = "clean"
) -> float:
    """Scale ``beta`` that puts ``snr_db(signal, beta * noise)`` at ``target_db``.

    With ``reference="clean"`` the signal is ``clean``. With ``"noisy"`` it is
    ``clean + beta * noise`` and ``beta`` is the smallest positive root of
    ``(r - 1)|N|^2 b^2 - 2<B, N> b - |B|^2 = 0`` where ``r = 10**(target/10)``.
    Below 0 dB that equation rarely has a positive root because independent
    noise adds energy to the signal; ``ValueError`` is raised then.
    """
    bb = frobenius_norm(clean) ** 2
    nn = frobenius_norm(noise) ** 2
    if bb == 0:
        raise ValueError("the clean tensor is zero")
    if nn == 0:
        raise ValueError("the noise tensor is zero")
    r = 10.0 ** (target_db / 10.0)
    if reference == "clean":
        return math.sqrt(bb / (r * nn))
    if reference != "noisy":
        raise ValueError(f"unknown SNR reference {reference!r}")
    bn = inner_product(clean, noise)
    qa, qb, qc = (r - 1.0) * nn, -2.0 * bn, -bb
    if qa == 0:
        roots = [-qc / qb] if qb != 0 else []
    else:
        disc = qb * qb - 4 * qa * qc
        roots = [] if disc < 0 else [(-qb + s * math.sqrt(disc)) / (2 * qa) for s in (1, -1)]
    positive = sorted(x for x in roots if x > 0)
    if not positive:
        raise ValueError(
            f"no noise level reaches {target_db} dB when the noisy tensor is the signal"
        )
    return positive[0]


def gen_lowrank_noise(spec: GeneratorSpec) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian Tucker tensor plus Gaussian noise at a target SNR.

    Core and factor entries are i.i.d. standard normal (factors are not
    orthonormalized). Returns ``(noisy, clean)``.
    """
    core_dims = spec.require_core()
    n_modes = len(spec.dims)
    core = RngStream(spec.seed, 0).generator().standard_normal(core_dims)
    factors = [
        RngStream(spec.seed, 1 + n).generator().standard_normal((d, r))
        for n, (d, r) in enumerate(zip(spec.dims, core_dims))
    ]
    clean = _tucker(core, factors)
    if spec.snr is None or math.isinf(spec.snr):
        return clean.copy(), clean
    noise = RngStream(spec.seed, 1 + n_modes).generator().standard_normal(spec.dims)
    beta = noise_level_for_snr(clean, noise, spec.snr, spec.snr_reference)
    return clean + beta * noise, clean


def diag_decay_values(size: int, plateau: int, decay: float = 2.0) -> np.ndarray:
    """``plateau`` ones followed by ``(i - plateau + 1) ** -decay`` for 1-based ``i``."""
    i = np.arange(1, size + 1, dtype=np.float64)
    v = np.ones(size)
    tail = i > plateau
    v[tail] = (i[tail] - plateau + 1) ** -decay
    return v


def gen_diag_decay(spec: GeneratorSpec) -> np.ndarray:
    """Superdiagonal tensor of decaying values rotated by random orthogonal matrices.

    Every unfolding has singular values equal to the diagonal values.
    """
    size = min(spec.dims)
    v = diag_decay_values(size, spec.split, spec.decay)
    if spec.rotate:
        factors = [
            _orthonormal_basis(d, d, RngStream(spec.seed, n))[:, :size]
            for n, d in enumerate(spec.dims)
        ]
    else:
        factors = [np.eye(d)[:, :size] for d in spec.dims]
    return cp_tensor(v, factors)


def gen_order4(spec: GeneratorSpec) -> np.ndarray:
    """Fourth-order Tucker-plus-noise or sparse CP tensor, by ``spec.kind``."""
    if spec.kind == "order4_noise":
        return gen_lowrank_noise(spec)[0]
    if spec.kind == "order4_sparse":
        return gen_sparse_cp(spec)
    raise ValueError(f"gen_order4 does not handle kind {spec.kind!r}")


def generate(spec: GeneratorSpec) -> np.ndarray:
    if spec.kind == "tucker_noise":
        return gen_tucker_noise(spec)
    if spec.kind == "sparse_cp":
        return gen_sparse_cp(spec)
    if spec.kind == "lowrank_noise":
        return gen_lowrank_noise(spec)[0]
    if spec.kind == "diag_decay":
        return gen_diag_decay(spec)
    return gen_order4(spec)


# -- TNSR files --------------------------------------------------------------

MAGIC = b"TNSR"
VERSION = 1
_HEADER = struct.Struct("<4sII")


class TensorFormatError(ValueError):
    """The file is not a valid TNSR tensor."""


class BadMagicError(TensorFormatError):
    pass


class UnsupportedVersionError(TensorFormatError):
    pass


class TruncatedFileError(TensorFormatError):
    pass


def save_tensor(path, t: np.ndarray) -> None:
    """Write ``t`` as little-endian float64 with the first index fastest."""
    t = as_tensor(t)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, t.ndim))
        fh.write(struct.pack(f"<{t.ndim}Q", *t.shape))
        fh.write(t.ravel(order="F").astype("<f8", copy=False).tobytes())


def load_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise TruncatedFileError(f"{path}: file ends inside the header")
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise TruncatedFileError(f"{path}: file ends inside the header")
    _, version, order = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    dims_end = _HEADER.size + 8 * order
    if len(data) < dims_end:
        raise TruncatedFileError(f"{path}: file ends inside the dimension list")
    dims = struct.unpack_from(f"<{order}Q", data, _HEADER.size)
    count = math.prod(dims)
    expected = dims_end + 8 * count
    if len(data) < expected:
        raise TruncatedFileError(
            f"{path}: expected {count} values, found {(len(data) - dims_end) // 8}"
        )
    if len(data) > expected:
        raise TensorFormatError(f"{path}: {len(data) - expected} trailing bytes")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=dims_end)
    return values.astype(np.float64).reshape(dims, order="F")
