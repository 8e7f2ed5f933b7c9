"""Minimal dense-tensor neural-network engine (float64, numpy)."""

from .layers import (
    Conv2D,
    Flatten,
    FullyConnected,
    LayerSpec,
    MaxPool2D,
    ReLU,
    Softmax,
    output_shape,
    param_shapes,
)
from .network import Network, build_network, compute_loss, forward, gradient_check, loss_and_gradients
from .optim import Hyperparams, sgd_momentum_step
from .weights_io import load_weights, save_weights

__all__ = [
    "Conv2D",
    "ReLU",
    "MaxPool2D",
    "Flatten",
    "FullyConnected",
    "Softmax",
    "LayerSpec",
    "output_shape",
    "param_shapes",
    "Network",
    "build_network",
    "forward",
    "compute_loss",
    "loss_and_gradients",
    "gradient_check",
    "Hyperparams",
    "sgd_momentum_step",
    "load_weights",
    "save_weights",
]
