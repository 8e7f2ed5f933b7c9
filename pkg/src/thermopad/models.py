"""Desk-scale CNN families for hand presentation-attack experiments.

Two architecture families are provided.  ``alex_micro`` keeps the shallow
5-conv layout (large strided stem, then 3x3 refinement convs); ``vgg_micro``
keeps the deep 16-conv layout (five 3x3 blocks with pooling between them).
Channel counts shrink by ``channel_scale`` so full training runs finish on a
single CPU, but the conv-layer counts that distinguish the families never
change with scale.  Both end in a three-layer fully-connected classifier
whose final layer (the bottleneck) can be swapped to retarget a trained
feature extractor at a different number of output classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError, StructureError
from .nn import (
    Conv2D,
    Flatten,
    FullyConnected,
    MaxPool2D,
    Network,
    ReLU,
    Softmax,
    build_network,
    forward,
    output_shape,
)

__all__ = ["ModelConfig", "build_model", "replace_bottleneck", "predict"]

FAMILIES = ("alex_micro", "vgg_micro")

# Reference channel progressions, shrunk by channel_scale at build time.
_ALEX_CHANNELS = (96, 256, 384, 384, 256)
_VGG_BLOCKS = ((2, 64), (2, 128), (4, 256), (4, 512), (4, 512))
_CLASSIFIER_WIDTH = 4096


@dataclass(frozen=True)
class ModelConfig:
    """Architecture choice plus the knobs that size it.

    ``input_size`` is (height, width, channels); ``channel_scale`` multiplies
    every conv width and the classifier hidden width, floored at 1.
    """

    family: str
    input_size: tuple[int, int, int]
    num_outputs: int
    channel_scale: float = 0.125

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown model family {self.family!r}, expected one of {FAMILIES}"
            )
        if len(self.input_size) != 3 or any(int(d) < 1 for d in self.input_size):
            raise ConfigurationError(
                f"input_size must be (height, width, channels) of positive ints, "
                f"got {self.input_size!r}"
            )
        if self.num_outputs < 1:
            raise ConfigurationError(f"num_outputs must be positive, got {self.num_outputs}")
        if not self.channel_scale > 0:
            raise ConfigurationError(
                f"channel_scale must be positive, got {self.channel_scale}"
            )


def _scaled(scale: float, width: int) -> int:
    return max(1, int(round(scale * width)))


def _conv_stack(cfg: ModelConfig) -> list:
    in_ch = cfg.input_size[2]
    if cfg.family == "alex_micro":
        c1, c2, c3, c4, c5 = (_scaled(cfg.channel_scale, w) for w in _ALEX_CHANNELS)
        return [
            Conv2D(in_ch, c1, 5, stride=4, padding=2),
            ReLU(),
            MaxPool2D(2),
            Conv2D(c1, c2, 5, padding=2),
            ReLU(),
            MaxPool2D(2),
            Conv2D(c2, c3, 3, padding=1),
            ReLU(),
            Conv2D(c3, c4, 3, padding=1),
            ReLU(),
            Conv2D(c4, c5, 3, padding=1),
            ReLU(),
            MaxPool2D(2),
        ]
    specs = []
    prev = in_ch
    for depth, width in _VGG_BLOCKS:
        ch = _scaled(cfg.channel_scale, width)
        for _ in range(depth):
            specs.append(Conv2D(prev, ch, 3, padding=1))
            specs.append(ReLU())
            prev = ch
        specs.append(MaxPool2D(2))
    return specs


def build_model(cfg: ModelConfig, seed: int = 0) -> Network:
    """Instantiate a seeded network for ``cfg``.

    The conv stack is validated against ``cfg.input_size`` before any
    parameters are allocated, so an input too small for the family fails
    with a configuration error naming the collapsing layer.
    """
    specs = _conv_stack(cfg)
    h, w, c = cfg.input_size
    shape = (c, h, w)
    for i, spec in enumerate(specs):
        shape = output_shape(spec, shape, i)
    flat = int(np.prod(shape))
    hidden = _scaled(cfg.channel_scale, _CLASSIFIER_WIDTH)
    specs += [
        Flatten(),
        FullyConnected(flat, hidden),
        ReLU(),
        FullyConnected(hidden, hidden),
        ReLU(),
        FullyConnected(hidden, cfg.num_outputs),
        Softmax(),
    ]
    return build_network(specs, cfg.input_size, seed=seed)


def replace_bottleneck(net: Network, new_num_outputs: int, seed: int = 0) -> Network:
    """Return a copy of ``net`` with a freshly initialized final layer.

    Every parameter before the last fully-connected layer is carried over
    bit-for-bit, along with its momentum state; the new head starts from the
    seeded init with zero velocity.  ``net`` itself is left untouched.
    """
    if new_num_outputs < 1:
        raise ConfigurationError(f"num_outputs must be positive, got {new_num_outputs}")
    if (
        len(net.specs) < 2
        or net.specs[-1].kind != "softmax"
        or net.specs[-2].kind != "fully_connected"
    ):
        raise StructureError(
            "bottleneck replacement needs a network ending with "
            "fully_connected followed by softmax"
        )
    head = net.specs[-2]
    specs = list(net.specs[:-2]) + [
        FullyConnected(head.in_features, new_num_outputs),
        Softmax(),
    ]
    out = build_network(specs, net.input_shape, seed=seed)
    head_index = len(specs) - 2
    for i, (p, v) in enumerate(zip(net.params, net.velocity)):
        if i == head_index:
            continue
        out.params[i] = {k: a.copy() for k, a in p.items()}
        out.velocity[i] = {k: a.copy() for k, a in v.items()}
    return out


def predict(net: Network, image: np.ndarray) -> np.ndarray:
    """Score a single preprocessed image; returns one softmax row."""
    image = np.asarray(image, dtype=np.float64)
    if tuple(image.shape) != tuple(net.input_shape):
        raise ShapeError(
            f"image shape {tuple(image.shape)} does not match network input "
            f"{tuple(net.input_shape)}"
        )
    return forward(net, image[np.newaxis])[0]
