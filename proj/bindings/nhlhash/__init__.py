"""Nested multi-length supervised hashing.

One training run produces binary codes at every configured length; short
codes are bit-exact prefixes of long ones.
"""

from ._nhl import (
    Checkpoint,
    CodeDatabase,
    ConfigError,
    DataError,
    Dataset,
    EpochStats,
    NumericError,
    Objective,
    Split,
    TrainConfig,
    TrainResult,
    Variant,
    compute_alphas,
    encode,
    gen_hash_centers,
    gen_synthetic,
    load_checkpoint,
    make_split,
    map_at_k,
    save_checkpoint,
    train,
)

__all__ = [
    "Checkpoint",
    "CodeDatabase",
    "ConfigError",
    "DataError",
    "Dataset",
    "EpochStats",
    "NumericError",
    "Objective",
    "Split",
    "TrainConfig",
    "TrainResult",
    "Variant",
    "compute_alphas",
    "encode",
    "gen_hash_centers",
    "gen_synthetic",
    "load_checkpoint",
    "make_split",
    "map_at_k",
    "save_checkpoint",
    "train",
]
