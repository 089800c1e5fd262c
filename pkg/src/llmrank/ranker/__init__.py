from .checkpoint import CheckpointMeta, load_checkpoint, save_checkpoint
from .losses import log_softmax, loss_listwise, loss_mse, loss_total, loss_total_grad
from .model import RankerParams, TENSOR_NAMES, backward, forward, forward_batch, init_params
from .optim import AdamWState, adamw_step, clip_gradients
from .training import TrainConfig, TrainingLog, UtilityTargets, compute_targets, train_ranker

__all__ = [
    "AdamWState",
    "CheckpointMeta",
    "RankerParams",
    "TENSOR_NAMES",
    "TrainConfig",
    "TrainingLog",
    "UtilityTargets",
    "adamw_step",
    "backward",
    "clip_gradients",
    "compute_targets",
    "forward",
    "forward_batch",
    "init_params",
    "load_checkpoint",
    "log_softmax",
    "loss_listwise",
    "loss_mse",
    "loss_total",
    "loss_total_grad",
    "save_checkpoint",
    "train_ranker",
]
