"""Training hyperparameters and the SGD-with-momentum update."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError, ShapeError
from .network import Network


@dataclass(frozen=True)
class Hyperparams:
    """Training knobs; defaults are the protocol's reference values."""

    learning_rate: float = 0.0001
    momentum: float = 0.9
    batch_size: int = 16
    patience: int = 10
    max_epochs: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")
        for name in ("batch_size", "patience", "max_epochs"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")


def sgd_momentum_step(net: Network, grads, hp: Hyperparams) -> Network:
    """Heavy-ball update, in place: v <- m*v + g; p <- p - lr*v."""
    for params, vel, layer_grads in zip(net.params, net.velocity, grads):
        for name, p in params.items():
            g = layer_grads[name]
            if g.shape != p.shape:
                raise ShapeError(
                    f"gradient shape {g.shape} does not match parameter shape {p.shape}"
                )
            v = vel[name]
            v *= hp.momentum
            v += g
            p -= hp.learning_rate * v
    return net
