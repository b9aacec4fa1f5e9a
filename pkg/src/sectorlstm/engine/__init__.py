from .checkpoint import checkpoint_bytes, load_checkpoint, save_checkpoint
from .model import (
    DenseLayerParams,
    ForwardCache,
    LstmLayerParams,
    ModelConfig,
    ModelParams,
    backward,
    expected_shapes,
    forward,
    forward_batch,
    huber_grad,
    huber_loss,
    init_params,
    lstm_cell_step,
    sigmoid,
)
from .optim import OptimizerState, adam_step, adam_update
from .training import TrainHistory, grid_search, predict_next, predict_scaled, predict_series, train

__all__ = [
    "DenseLayerParams", "ForwardCache", "LstmLayerParams", "ModelConfig", "ModelParams",
    "OptimizerState", "TrainHistory", "adam_step", "adam_update", "backward", "checkpoint_bytes",
    "expected_shapes", "forward", "forward_batch", "grid_search", "huber_grad", "huber_loss",
    "init_params", "load_checkpoint", "lstm_cell_step", "predict_next", "predict_scaled",
    "predict_series", "save_checkpoint", "sigmoid", "train",
]
