"""From-scratch neural models: parameters, forward/backward, optimizers, training."""

from .spec import (
    MODEL_KINDS,
    LOSS_KINDS,
    OPTIMIZER_KINDS,
    PROB_EPS,
    EpochStats,
    ModelSpec,
    OptimizerConfig,
    TrainConfig,
    TrainReport,
)
from .params import (
    ParamStore,
    glorot_uniform,
    he_normal,
    init_params,
    orthogonal,
    param_layout,
    regularized_kernels,
)
from .model import (
    backward,
    compute_loss,
    forward,
    l2_terms,
    loss_kind_for,
    positive_scores,
    sigmoid,
    softmax_rows,
)
from .optim import OptimizerState, clip_by_global_norm, optimizer_step
from .training import Split, predict_scores, split_dataset, train
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "MODEL_KINDS",
    "LOSS_KINDS",
    "OPTIMIZER_KINDS",
    "PROB_EPS",
    "EpochStats",
    "ModelSpec",
    "OptimizerConfig",
    "TrainConfig",
    "TrainReport",
    "ParamStore",
    "glorot_uniform",
    "he_normal",
    "init_params",
    "orthogonal",
    "param_layout",
    "regularized_kernels",
    "backward",
    "compute_loss",
    "forward",
    "l2_terms",
    "loss_kind_for",
    "positive_scores",
    "sigmoid",
    "softmax_rows",
    "OptimizerState",
    "clip_by_global_norm",
    "optimizer_step",
    "Split",
    "predict_scores",
    "split_dataset",
    "train",
    "load_checkpoint",
    "save_checkpoint",
]
