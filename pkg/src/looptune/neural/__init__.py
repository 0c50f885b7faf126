from .kernels import BACKEND, conv1d_backward, conv1d_forward
from .kernels_numpy import ShapeMismatch
from .model import (EmptyBatch, Hyperparams, Model, ModelConfig, SgdOptimizer,
                    dense_block_backward, dense_block_forward, init_params,
                    mse_loss, sgd_step)
from .checkpoint import CheckpointError, load_model, save_model
from .train import TrainResult, total_accuracy, train_model

__all__ = [
    "BACKEND", "conv1d_forward", "conv1d_backward", "ShapeMismatch",
    "EmptyBatch", "Hyperparams", "Model", "ModelConfig", "SgdOptimizer",
    "dense_block_forward", "dense_block_backward", "init_params", "mse_loss",
    "sgd_step", "CheckpointError", "save_model", "load_model",
    "TrainResult", "total_accuracy", "train_model",
]
