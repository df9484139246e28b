"""Acoustic-vibration fusion fault-diagnosis pipeline."""

from ._core import (
    base_from_virtual,
    config_hash,
    cross_entropy,
    evaluate,
    finetune,
    log_mel,
    lr_at,
    minmax_normalize,
    pretrain,
    resample,
    speed_grid,
    speed_perturb,
    synth_dataset,
    virtual_label,
)

__all__ = [
    "base_from_virtual",
    "config_hash",
    "cross_entropy",
    "evaluate",
    "finetune",
    "log_mel",
    "lr_at",
    "minmax_normalize",
    "pretrain",
    "resample",
    "speed_grid",
    "speed_perturb",
    "synth_dataset",
    "virtual_label",
]
