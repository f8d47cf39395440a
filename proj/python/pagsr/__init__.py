"""Progressive attention-guided depth super-resolution."""

from ._core import (
    PagsrError,
    ModelConfig,
    Weights,
    bicubic_resample,
    degrade,
    load_image,
    masked_rmse,
    parameter_count,
    patch_count,
    rmse,
    save_image,
    super_resolve,
    synthetic_scene,
    train,
)

__all__ = [
    "PagsrError",
    "ModelConfig",
    "Weights",
    "bicubic_resample",
    "degrade",
    "load_image",
    "masked_rmse",
    "parameter_count",
    "patch_count",
    "rmse",
    "save_image",
    "super_resolve",
    "synthetic_scene",
    "train",
]
