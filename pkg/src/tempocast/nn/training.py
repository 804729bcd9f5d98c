"""Seeded mini-batch training loop with best-parameter tracking and early stopping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ParameterError, TrainingDivergedError
from .adam import AdamState, adam_step

log = logging.getLogger(__name__)

PATIENCE_UNITS = ("epochs", "steps")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 500
    patience: int = 50
    patience_unit: str = "epochs"
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ParameterError("patience must be >= 1")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ParameterError("Adam betas must lie in (0, 1)")
        if self.eps <= 0:
            raise ParameterError("Adam eps must be positive")
        if self.patience_unit not in PATIENCE_UNITS:
            raise ParameterError(f"patience_unit must be one of {PATIENCE_UNITS}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ParameterError("batch_size and max_epochs must be positive")


#: profile presets; the paper-faithful profile has effectively unbounded runtime
PROFILES = {
    "desk": {"patience": 50, "max_epochs": 500},
    "paper": {"patience": 1500, "max_epochs": 5000},
}


def apply_profile(cfg: TrainConfig, profile: str) -> TrainConfig:
    if profile not in PROFILES:
        raise ParameterError(f"unknown training profile {profile!r}, expected {sorted(PROFILES)}")
    return replace(cfg, **PROFILES[profile])


@dataclass
class TrainResult:
    params: dict
    best_epoch: int
    best_val_mse: float
    epochs_run: int
    val_history: list


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(np.mean(d * d))


def train(net, X_train, Y_train, X_val, Y_val, cfg: TrainConfig) -> TrainResult:
    """Train ``net`` and return the parameters of the best validation epoch.

    Stops when validation MSE has not improved for ``patience`` consecutive
    epochs (or, in steps mode, when that many consecutive batch losses fail
    to improve on their predecessor), or at ``max_epochs``.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    Y_train = np.asarray(Y_train, dtype=np.float64)
    X_val = np.asarray(X_val, dtype=np.float64)
    Y_val = np.asarray(Y_val, dtype=np.float64)
    if len(X_train) == 0 or len(X_val) == 0:
        raise ParameterError("train and val sets must be non-empty")

    rng = np.random.default_rng(cfg.seed)
    params = net.init_params(rng)
    state = AdamState()

    best_params = None
    best_val = np.inf
    best_epoch = 0
    bad_epochs = 0
    step_streak = 0
    prev_batch_loss = np.inf
    history = []
    n = len(X_train)
    stop = False

    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads = net.loss_and_grads(params, X_train[idx], Y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            try:
                params, state = adam_step(state, params, grads, cfg)
            except TrainingDivergedError as err:
                raise TrainingDivergedError(f"{err} at epoch {epoch}", epoch=epoch) from None
            if cfg.patience_unit == "steps":
                step_streak = step_streak + 1 if loss >= prev_batch_loss else 0
                prev_batch_loss = loss
                if step_streak >= cfg.patience:
                    stop = True
                    break

        val_mse = _mse(net.forward(params, X_val), Y_val)
        if not np.isfinite(val_mse):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}", epoch=epoch)
        history.append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
        if stop or (cfg.patience_unit == "epochs" and bad_epochs >= cfg.patience):
            break

    log.debug("train: stopped after epoch %d, best epoch %d (val MSE %.6g)", epoch, best_epoch, best_val)
    return TrainResult(
        params=best_params,
        best_epoch=best_epoch,
        best_val_mse=best_val,
        epochs_run=epoch,
        val_history=history,
    )
