from .layers import (
    AdaptiveAvgPool4,
    Conv3x3,
    Flatten,
    Linear,
    MaxPool2x2,
    Param,
    ReLU,
    Sequential,
    Tanh,
    check_finite,
)
from .optim import Adam
from .serialize import load_params, save_params

__all__ = [
    "AdaptiveAvgPool4",
    "Adam",
    "Conv3x3",
    "Flatten",
    "Linear",
    "MaxPool2x2",
    "Param",
    "ReLU",
    "Sequential",
    "Tanh",
    "check_finite",
    "load_params",
    "save_params",
]
