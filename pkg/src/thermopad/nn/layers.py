"""Layer specs and their forward/backward kernels.

Six layer kinds are supported: conv2d, relu, maxpool2d, flatten,
fully_connected, softmax.  Everything runs on float64 numpy arrays.
Image activations use NCHW layout internally; vector activations are
(batch, features).

Each spec is an immutable dataclass.  The kernels are free functions keyed
by ``spec.kind`` so a network is just an ordered list of specs plus its
parameter arrays (see ``thermopad.nn.network``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

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
    "layer_forward",
    "layer_backward",
]


@dataclass(frozen=True)
class Conv2D:
    """2D convolution, weight shape (out_channels, in_channels, k, k)."""

    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0
    kind: str = "conv2d"

    def __post_init__(self):
        if self.kernel_size < 1 or self.stride < 1 or self.out_channels < 1:
            raise ConfigurationError(
                f"conv2d requires kernel_size/stride/out_channels >= 1, got "
                f"kernel_size={self.kernel_size} stride={self.stride} "
                f"out_channels={self.out_channels}"
            )
        if self.padding < 0:
            raise ConfigurationError(f"conv2d padding must be >= 0, got {self.padding}")


@dataclass(frozen=True)
class ReLU:
    kind: str = "relu"


@dataclass(frozen=True)
class MaxPool2D:
    """Max pooling; stride defaults to the pool size (non-overlapping)."""

    pool_size: int
    stride: int | None = None
    kind: str = "maxpool2d"

    def __post_init__(self):
        if self.pool_size < 1:
            raise ConfigurationError(f"maxpool2d pool_size must be >= 1, got {self.pool_size}")

    @property
    def effective_stride(self) -> int:
        return self.pool_size if self.stride is None else self.stride


@dataclass(frozen=True)
class Flatten:
    kind: str = "flatten"


@dataclass(frozen=True)
class FullyConnected:
    in_features: int
    out_features: int
    kind: str = "fully_connected"

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise ConfigurationError(
                f"fully_connected needs positive feature counts, got "
                f"{self.in_features} -> {self.out_features}"
            )


@dataclass(frozen=True)
class Softmax:
    kind: str = "softmax"


LayerSpec = Conv2D | ReLU | MaxPool2D | Flatten | FullyConnected | Softmax


def output_shape(spec: LayerSpec, in_shape: tuple[int, ...], index: int) -> tuple[int, ...]:
    """Per-sample output shape for `spec` given per-sample `in_shape`.

    Image shapes are (channels, height, width); vector shapes are (features,).
    Raises ConfigurationError naming the layer when a spatial dimension would
    collapse below 1.
    """
    name = f"layer {index} ({spec.kind})"
    if spec.kind == "conv2d":
        if len(in_shape) != 3:
            raise ConfigurationError(f"{name} expects an image input, got shape {in_shape}")
        c, h, w = in_shape
        if c != spec.in_channels:
            raise ConfigurationError(
                f"{name} expects {spec.in_channels} input channels, got {c}"
            )
        oh = (h + 2 * spec.padding - spec.kernel_size) // spec.stride + 1
        ow = (w + 2 * spec.padding - spec.kernel_size) // spec.stride + 1
        if oh < 1 or ow < 1:
            raise ConfigurationError(
                f"{name} reduces spatial size {h}x{w} below 1 "
                f"(kernel {spec.kernel_size}, stride {spec.stride}, padding {spec.padding})"
            )
        return (spec.out_channels, oh, ow)
    if spec.kind == "maxpool2d":
        if len(in_shape) != 3:
            raise ConfigurationError(f"{name} expects an image input, got shape {in_shape}")
        c, h, w = in_shape
        s = spec.effective_stride
        oh = (h - spec.pool_size) // s + 1
        ow = (w - spec.pool_size) // s + 1
        if oh < 1 or ow < 1:
            raise ConfigurationError(
                f"{name} reduces spatial size {h}x{w} below 1 (pool {spec.pool_size})"
            )
        return (c, oh, ow)
    if spec.kind == "relu" or spec.kind == "softmax":
        return in_shape
    if spec.kind == "flatten":
        return (int(np.prod(in_shape)),)
    if spec.kind == "fully_connected":
        if len(in_shape) != 1:
            raise ConfigurationError(
                f"{name} expects a flat input, got shape {in_shape} (missing flatten?)"
            )
        if in_shape[0] != spec.in_features:
            raise ConfigurationError(
                f"{name} expects {spec.in_features} features, got {in_shape[0]}"
            )
        return (spec.out_features,)
    raise ConfigurationError(f"unknown layer kind {spec.kind!r}")


def param_shapes(spec: LayerSpec) -> dict[str, tuple[int, ...]]:
    """Learnable parameter shapes for `spec` ({} for parameter-free layers)."""
    if spec.kind == "conv2d":
        k = spec.kernel_size
        return {
            "weight": (spec.out_channels, spec.in_channels, k, k),
            "bias": (spec.out_channels,),
        }
    if spec.kind == "fully_connected":
        return {
            "weight": (spec.in_features, spec.out_features),
            "bias": (spec.out_features,),
        }
    return {}


def fan_in(spec: LayerSpec) -> int:
    if spec.kind == "conv2d":
        return spec.in_channels * spec.kernel_size * spec.kernel_size
    if spec.kind == "fully_connected":
        return spec.in_features
    return 0


# ---------------------------------------------------------------------------
# kernels


def _im2col(x: np.ndarray, k: int, stride: int) -> tuple[np.ndarray, int, int]:
    """Unfold (n, c, h, w) into rows of k*k patches: (n*oh*ow, c*k*k)."""
    n, c = x.shape[:2]
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    oh, ow = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * k * k)
    return np.ascontiguousarray(cols), oh, ow


def _conv2d_forward(spec: Conv2D, x: np.ndarray, params):
    if spec.padding > 0:
        p = spec.padding
        x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    cols, oh, ow = _im2col(x, spec.kernel_size, spec.stride)
    w = params["weight"].reshape(spec.out_channels, -1)
    y = cols @ w.T + params["bias"]
    n = x.shape[0]
    y = y.reshape(n, oh, ow, spec.out_channels).transpose(0, 3, 1, 2)
    cache = (cols, x.shape)
    return y, cache


def _conv2d_backward(spec: Conv2D, dy: np.ndarray, params, cache, need_dx=True):
    cols, padded_shape = cache
    n, _, oh, ow = dy.shape
    k, s, p = spec.kernel_size, spec.stride, spec.padding
    dy_mat = np.ascontiguousarray(dy.transpose(0, 2, 3, 1).reshape(n * oh * ow, -1))
    grads = {
        "weight": (dy_mat.T @ cols).reshape(params["weight"].shape),
        "bias": dy_mat.sum(axis=0),
    }
    if not need_dx:
        return None, grads
    # dx as a stride-1 correlation of the zero-stuffed upstream gradient with
    # the channel-transposed, spatially flipped kernel.
    hp, wp = padded_shape[2], padded_shape[3]
    dil_h, dil_w = (oh - 1) * s + 1, (ow - 1) * s + 1
    dy_dil = np.zeros((n, spec.out_channels, dil_h + 2 * (k - 1), dil_w + 2 * (k - 1)))
    dy_dil[:, :, k - 1 : k - 1 + dil_h : s, k - 1 : k - 1 + dil_w : s] = dy
    w_flip = params["weight"][:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    cols_b, bh, bw = _im2col(dy_dil, k, 1)
    dxp_mat = cols_b @ w_flip.reshape(spec.in_channels, -1).T
    dxp = np.zeros(padded_shape)
    # strided windows can leave trailing rows/cols of the input untouched
    dxp[:, :, :bh, :bw] = dxp_mat.reshape(n, bh, bw, spec.in_channels).transpose(0, 3, 1, 2)
    dx = dxp[:, :, p : hp - p, p : wp - p] if p > 0 else dxp
    return dx, grads


def _maxpool_forward(spec: MaxPool2D, x: np.ndarray, params):
    k, s = spec.pool_size, spec.effective_stride
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    windows = windows[:, :, ::s, ::s]
    n, c, oh, ow = windows.shape[:4]
    flat = windows.reshape(n, c, oh, ow, k * k)
    arg = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (arg, x.shape)
    return y, cache


def _maxpool_backward(spec: MaxPool2D, dy: np.ndarray, params, cache):
    arg, in_shape = cache
    k, s = spec.pool_size, spec.effective_stride
    n, c, oh, ow = dy.shape
    h, w = in_shape[2], in_shape[3]
    rows = (np.arange(oh) * s)[None, None, :, None] + arg // k
    cols = (np.arange(ow) * s)[None, None, None, :] + arg % k
    bi = np.arange(n)[:, None, None, None]
    ci = np.arange(c)[None, :, None, None]
    flat_idx = ((bi * c + ci) * h + rows) * w + cols
    dx = np.zeros(in_shape)
    np.add.at(dx.reshape(-1), flat_idx.reshape(-1), dy.reshape(-1))
    return dx, {}


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def layer_forward(spec: LayerSpec, x: np.ndarray, params: dict) -> tuple[np.ndarray, object]:
    """Run one layer forward; returns (output, cache-for-backward)."""
    kind = spec.kind
    if kind == "conv2d":
        return _conv2d_forward(spec, x, params)
    if kind == "relu":
        return np.maximum(x, 0.0), (x > 0)
    if kind == "maxpool2d":
        return _maxpool_forward(spec, x, params)
    if kind == "flatten":
        return x.reshape(x.shape[0], -1), x.shape
    if kind == "fully_connected":
        return x @ params["weight"] + params["bias"], x
    if kind == "softmax":
        p = _softmax(x)
        return p, p
    raise ConfigurationError(f"unknown layer kind {kind!r}")


def layer_backward(
    spec: LayerSpec, dy: np.ndarray, params: dict, cache, need_dx: bool = True
) -> tuple[np.ndarray, dict]:
    """Backprop one layer; returns (d_input, parameter gradients).

    ``need_dx=False`` skips the input-gradient computation (worth doing for
    the first layer, whose d_input is never consumed); d_input is then None.
    """
    kind = spec.kind
    if kind == "conv2d":
        return _conv2d_backward(spec, dy, params, cache, need_dx)
    if kind == "relu":
        return dy * cache, {}
    if kind == "maxpool2d":
        return _maxpool_backward(spec, dy, params, cache)
    if kind == "flatten":
        return dy.reshape(cache), {}
    if kind == "fully_connected":
        x = cache
        return dy @ params["weight"].T, {"weight": x.T @ dy, "bias": dy.sum(axis=0)}
    if kind == "softmax":
        p = cache
        return p * (dy - (dy * p).sum(axis=1, keepdims=True)), {}
    raise ConfigurationError(f"unknown layer kind {kind!r}")
