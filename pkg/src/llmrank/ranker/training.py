"""Cost-adjusted utility targets and the full training loop.

Training minimizes loss_total on mini-batches with AdamW, per-epoch seeded
shuffling, global-norm gradient clipping, and early stopping on validation
loss: the best-validation parameters are kept, and training stops once the
number of epochs since the last improvement exceeds the patience.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..errors import TrainingDiverged, ValidationError
from .losses import loss_total, loss_total_grad
from .model import RankerParams, backward, forward_batch, init_params
from .optim import AdamWState, adamw_step, clip_gradients


@dataclass(frozen=True)
class TrainConfig:
    lambda_: float = 0.0
    lr: float = 3e-4
    weight_decay: float = 1e-2
    epochs: int = 100
    batch_size: int = 256
    patience: int = 10
    clip_norm: float = 1.0
    dropout: float = 0.1
    tau: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.lambda_ < 0.0:
            raise ValidationError(f"lambda must be >= 0, got {self.lambda_}")
        if self.tau <= 0.0:
            raise ValidationError(f"tau must be positive, got {self.tau}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must be in [0,1), got {self.dropout}")
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 0:
            raise ValidationError("epochs/batch_size must be >= 1, patience >= 0")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_, "lr": self.lr, "weight_decay": self.weight_decay,
            "epochs": self.epochs, "batch_size": self.batch_size,
            "patience": self.patience, "clip_norm": self.clip_norm,
            "dropout": self.dropout, "tau": self.tau, "seed": self.seed,
        }


@dataclass(frozen=True)
class UtilityTargets:
    u: np.ndarray  # (n, m)
    lambda_: float


def compute_targets(dataset: Dataset, lambda_: float) -> UtilityTargets:
    """u_ij = quality_ij - lambda * cost_ij."""
    if lambda_ < 0.0:
        raise ValidationError(f"lambda must be >= 0, got {lambda_}")
    u = dataset.quality_matrix() - lambda_ * dataset.cost_matrix()
    return UtilityTargets(u=u, lambda_=lambda_)


@dataclass
class TrainingLog:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "train_losses": self.train_losses,
                "val_losses": self.val_losses,
                "best_epoch": self.best_epoch,
                "stopped_epoch": self.stopped_epoch,
            },
            sort_keys=True,
        )


def _validation_loss(
    params: RankerParams, Xj: np.ndarray, Xt: np.ndarray, u: np.ndarray, tau: float
) -> float:
    scores, _ = forward_batch(params, Xj, Xt, train_mode=False)
    return loss_total(scores, u, tau)


def train_ranker(
    train_set: Dataset,
    val_set: Dataset,
    train_features: np.ndarray,
    train_embeddings: np.ndarray,
    val_features: np.ndarray,
    val_embeddings: np.ndarray,
    config: TrainConfig,
    hidden: int = 256,
    feature_schema_version: int = 1,
) -> tuple[RankerParams, TrainingLog]:
    n = len(train_set)
    if train_features.shape[0] != n or train_embeddings.shape[0] != n:
        raise ValidationError("train feature/embedding rows disagree with dataset size")
    if val_features.shape[0] != len(val_set) or val_embeddings.shape[0] != len(val_set):
        raise ValidationError("val feature/embedding rows disagree with dataset size")
    if val_features.shape[1] != train_features.shape[1]:
        raise ValidationError("train/val feature dims disagree")
    if val_embeddings.shape[1] != train_embeddings.shape[1]:
        raise ValidationError("train/val embedding dims disagree")

    u_train = compute_targets(train_set, config.lambda_).u
    u_val = compute_targets(val_set, config.lambda_).u

    rng = np.random.default_rng(config.seed)
    params = init_params(
        rng,
        d_j=train_features.shape[1],
        d_t=train_embeddings.shape[1],
        m=train_set.pool.size,
        h=hidden,
        feature_schema_version=feature_schema_version,
        pool_fingerprint=train_set.pool.fingerprint(),
    )
    state = AdamWState.for_params(params)

    log = TrainingLog()
    best_val = np.inf
    best_params = params.copy()
    since_best = 0

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            scores, cache = forward_batch(
                params,
                train_features[batch],
                train_embeddings[batch],
                train_mode=True,
                dropout=config.dropout,
                rng=rng,
            )
            batch_loss = loss_total(scores, u_train[batch], config.tau)
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}",
                    epoch=epoch,
                    batch=start // config.batch_size,
                )
            grads = backward(params, cache, loss_total_grad(scores, u_train[batch], config.tau))
            grads = clip_gradients(grads, config.clip_norm)
            adamw_step(params, grads, state, config.lr, config.weight_decay)
            epoch_loss += batch_loss * len(batch)

        val_loss = _validation_loss(params, val_features, val_embeddings, u_val, config.tau)
        log.train_losses.append(epoch_loss / n)
        log.val_losses.append(float(val_loss))

        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            log.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
        log.stopped_epoch = epoch
        if since_best > config.patience:
            break

    return best_params, log
