"""Low multilinear-rank (Tucker) approximation of dense tensors.

Deterministic HOSVD-family baselines, randomized sketching variants with a
power scheme or column sampling, error-bound evaluators, synthetic data
generators and a benchmark harness.
"""

from .algorithms import (
    ALGORITHMS,
    AlgoConfig,
    RankClampWarning,
    TuckerDecomposition,
    fit,
    hooi,
    rand_sthosvd_amm,
    rand_sthosvd_power,
    rand_sthosvd_power_qr,
    rand_thosvd_amm,
    rand_thosvd_power,
    rand_thosvd_power_qr,
    reconstruct,
    relative_error,
    run_algorithm,
    st_hosvd,
    t_hosvd,
)
from .datagen import GeneratorSpec, desk_spec, generate, load_tensor, save_tensor
from .tensor import fold, mode_n_product, unfold

__all__ = [
    "ALGORITHMS",
    "AlgoConfig",
    "RankClampWarning",
    "TuckerDecomposition",
    "GeneratorSpec",
    "desk_spec",
    "generate",
    "load_tensor",
    "save_tensor",
    "fit",
    "fold",
    "hooi",
    "mode_n_product",
    "rand_sthosvd_amm",
    "rand_sthosvd_power",
    "rand_sthosvd_power_qr",
    "rand_thosvd_amm",
    "rand_thosvd_power",
    "rand_thosvd_power_qr",
    "reconstruct",
    "relative_error",
    "run_algorithm",
    "st_hosvd",
    "t_hosvd",
    "unfold",
]
