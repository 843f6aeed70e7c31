from __future__ import annotations

from dataclasses import dataclass


@dataclass
class TrainConfig:
    """Knobs shared by sparsity training and KD retraining.

    Defaults follow the standard protocol: sparsity coefficient 1e-4,
    distillation coefficient 0.1 at temperature 1, label smoothing 0.1,
    cosine learning-rate decay with one warm-up epoch. Epoch counts are
    desk-scale choices, not protocol constants.
    """

    epochs: int = 10
    batch_size: int = 128
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 5e-4
    schedule: str = "cosine"  # or "constant"
    warmup_epochs: int = 1
    label_smoothing: float = 0.1
    alpha_s: float = 1e-4
    alpha_d: float = 0.1
    kd_temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha_s < 0 or self.alpha_d < 0:
            raise ValueError("sparsity and distillation coefficients must be >= 0")
        if self.kd_temperature <= 0:
            raise ValueError("distillation temperature must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
