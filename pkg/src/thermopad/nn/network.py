"""Network container, forward/backward passes, and gradient verification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import LabelError, ShapeError, StructureError
from ..seeding import derive_rng
from . import layers as L

__all__ = ["Network", "build_network", "forward", "loss_and_gradients", "gradient_check"]


@dataclass
class Network:
    """Ordered layer specs plus their parameter and momentum-state arrays.

    ``input_shape`` is the per-sample shape callers provide: (height, width,
    channels) for image networks, (features,) for flat-input networks.
    ``params[i]`` and ``velocity[i]`` hold the arrays for ``specs[i]`` (empty
    dicts for parameter-free layers); velocity starts all-zero.
    """

    specs: list[L.LayerSpec]
    input_shape: tuple[int, ...]
    params: list[dict[str, np.ndarray]]
    velocity: list[dict[str, np.ndarray]] = field(default_factory=list)

    def __post_init__(self):
        if not self.velocity:
            self.velocity = [
                {k: np.zeros_like(v) for k, v in p.items()} for p in self.params
            ]

    @property
    def num_outputs(self) -> int:
        spec = self.specs[-2] if len(self.specs) >= 2 else None
        if spec is None or spec.kind != "fully_connected" or self.specs[-1].kind != "softmax":
            raise StructureError(
                "network must end with fully_connected followed by softmax"
            )
        return spec.out_features

    def num_parameters(self) -> int:
        return sum(int(a.size) for p in self.params for a in p.values())

    def internal_input_shape(self) -> tuple[int, ...]:
        """Per-sample shape in engine layout (CHW for images)."""
        if len(self.input_shape) == 3:
            h, w, c = self.input_shape
            return (c, h, w)
        return tuple(self.input_shape)

    def copy_params(self) -> list[dict[str, np.ndarray]]:
        return [{k: v.copy() for k, v in p.items()} for p in self.params]

    def set_params(self, params: list[dict[str, np.ndarray]]) -> None:
        for own, new in zip(self.params, params):
            for k in own:
                own[k][...] = new[k]


def build_network(specs: list[L.LayerSpec], input_shape: tuple[int, ...], seed: int) -> Network:
    """Create a Network with seeded fan-in-scaled uniform weights.

    Weights draw from U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases start at
    zero, as does all momentum state.  The layer shape chain is validated
    here, so a spatially impossible stack fails at construction time.
    """
    shape = (input_shape[2], input_shape[0], input_shape[1]) if len(input_shape) == 3 else tuple(input_shape)
    for i, spec in enumerate(specs):
        shape = L.output_shape(spec, shape, i)
    rng = derive_rng(seed)
    params = []
    for spec in specs:
        shapes = L.param_shapes(spec)
        if not shapes:
            params.append({})
            continue
        bound = np.sqrt(6.0 / L.fan_in(spec))
        params.append(
            {
                "weight": rng.uniform(-bound, bound, size=shapes["weight"]),
                "bias": np.zeros(shapes["bias"]),
            }
        )
    return Network(specs=list(specs), input_shape=tuple(input_shape), params=params)


def _check_batch(net: Network, batch: np.ndarray) -> np.ndarray:
    expected = tuple(net.input_shape)
    if batch.ndim != len(expected) + 1 or tuple(batch.shape[1:]) != expected:
        raise ShapeError(
            f"batch shape {tuple(batch.shape)} does not match network input: "
            f"expected (n, {', '.join(map(str, expected))})"
        )
    x = np.asarray(batch, dtype=np.float64)
    if len(expected) == 3:
        x = np.ascontiguousarray(x.transpose(0, 3, 1, 2))
    return x


def _run_layers(net: Network, x: np.ndarray, keep_caches: bool):
    caches = [] if keep_caches else None
    for spec, params in zip(net.specs, net.params):
        x, cache = L.layer_forward(spec, x, params)
        if keep_caches:
            caches.append(cache)
    return x, caches


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Full forward pass; returns the final layer's output.

    For a classifier (ending in softmax) that is one probability row per
    sample, each row summing to 1.
    """
    x = _check_batch(net, batch)
    y, _ = _run_layers(net, x, keep_caches=False)
    return y


def _check_labels(labels: np.ndarray, num_outputs: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_outputs):
        bad = labels[(labels < 0) | (labels >= num_outputs)][0]
        raise LabelError(f"label {int(bad)} outside [0, {num_outputs})")
    return labels.astype(np.intp)


def _logits_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy from pre-softmax logits (log-sum-exp form)."""
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return float(np.mean(lse - logits[np.arange(len(labels)), labels]))


def compute_loss(net: Network, batch: np.ndarray, labels: np.ndarray) -> float:
    """Cross-entropy loss only (no gradients); used by the numeric checker."""
    if net.specs[-1].kind != "softmax":
        raise StructureError("loss requires a softmax output layer")
    x = _check_batch(net, batch)
    for spec, params in zip(net.specs[:-1], net.params[:-1]):
        x, _ = L.layer_forward(spec, x, params)
    return _logits_loss(x, _check_labels(labels, x.shape[1]))


def loss_and_gradients(
    net: Network, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, list[dict[str, np.ndarray]]]:
    """Mean cross-entropy of the true classes plus per-parameter gradients.

    Gradient shapes mirror the parameter shapes exactly.  The softmax and the
    cross-entropy are differentiated jointly, so the first upstream gradient
    is (probabilities - one_hot) / batch_size at the softmax input.
    """
    if net.specs[-1].kind != "softmax":
        raise StructureError("loss requires a softmax output layer")
    x = _check_batch(net, batch)
    n = x.shape[0]

    caches = []
    for spec, params in zip(net.specs[:-1], net.params[:-1]):
        x, cache = L.layer_forward(spec, x, params)
        caches.append(cache)
    logits = x
    labels = _check_labels(labels, logits.shape[1])
    loss = _logits_loss(logits, labels)

    probs, _ = L.layer_forward(net.specs[-1], logits, {})
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads: list[dict[str, np.ndarray]] = [{} for _ in net.specs]
    for i in range(len(net.specs) - 2, -1, -1):
        delta, g = L.layer_backward(
            net.specs[i], delta, net.params[i], caches[i], need_dx=i > 0
        )
        grads[i] = g
    return loss, grads


def gradient_check(
    net: Network, batch: np.ndarray, labels: np.ndarray, epsilon: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Exhaustively perturbs every parameter entry, so keep the network small.
    Relative error is |a - n| / max(|a|, |n|, 1e-12); a parameter-free
    network returns 0.0.
    """
    _, grads = loss_and_gradients(net, batch, labels)
    worst = 0.0
    for layer_params, layer_grads in zip(net.params, grads):
        for name, arr in layer_params.items():
            flat = arr.reshape(-1)
            gflat = layer_grads[name].reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + epsilon
                up = compute_loss(net, batch, labels)
                flat[j] = orig - epsilon
                down = compute_loss(net, batch, labels)
                flat[j] = orig
                numeric = (up - down) / (2.0 * epsilon)
                analytic = gflat[j]
                denom = max(abs(analytic), abs(numeric), 1e-12)
                worst = max(worst, abs(analytic - numeric) / denom)
    return worst
