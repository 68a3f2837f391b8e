from .layers import lstm_cell_forward
from .model import (
    LOSS_BCE,
    LOSS_CE,
    LOSS_LITERAL,
    SIGMOID,
    SOFTMAX,
    ModelParams,
    backward,
    calibrate_batchnorm,
    decode_codeword,
    forward_macs,
    gradient_check,
    gradient_check_by_tensor,
    init_params,
    loss,
    model_forward,
    predict,
)
from .optim import AdamState, adam_step
from .persistence import load_model, save_model
from .training import History, TrainConfig, train

__all__ = [
    "LOSS_BCE",
    "LOSS_CE",
    "LOSS_LITERAL",
    "SIGMOID",
    "SOFTMAX",
    "AdamState",
    "History",
    "ModelParams",
    "TrainConfig",
    "adam_step",
    "backward",
    "calibrate_batchnorm",
    "decode_codeword",
    "forward_macs",
    "gradient_check",
    "gradient_check_by_tensor",
    "init_params",
    "load_model",
    "loss",
    "lstm_cell_forward",
    "model_forward",
    "predict",
    "save_model",
    "train",
]
