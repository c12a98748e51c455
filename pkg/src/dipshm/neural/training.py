"""Mini-batch SGDM training with a stepped learning-rate schedule.

Defaults mirror the benchmark training recipe: momentum 0.9, batch size 32,
200 epochs, learning rate 2e-3 dropped by 0.1 every 20 epochs, L2 penalty
1e-3 folded into the optimizer step (reported losses stay plain
cross-entropy). The weights with the best validation accuracy are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError, TrainingError
from .network import ModelSpec, Network, build

_TINY = 1e-300


def cross_entropy(probs, labels) -> float:
    """Mean -ln(p_label) over the batch."""
    probs = np.atleast_2d(probs)
    labels = np.atleast_1d(labels)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, _TINY)).mean())


def cross_entropy_grad(probs, labels):
    """Gradient of the mean cross-entropy with respect to the probabilities."""
    probs = np.atleast_2d(probs)
    labels = np.atleast_1d(labels)
    grad = np.zeros_like(probs)
    idx = np.arange(len(labels))
    grad[idx, labels] = -1.0 / np.maximum(probs[idx, labels], _TINY) / len(labels)
    return grad


def sgdm_step(weights, velocity, gradient, lr, momentum, l2=0.0):
    """v <- momentum*v - lr*(g + l2*w); w <- w + v. Returns the new pair."""
    velocity = momentum * velocity - lr * (gradient + l2 * weights)
    return weights + velocity, velocity


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "sgdm"
    loss: str = "cross_entropy"
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 200
    learning_rate: float = 0.002
    l2_regularization: float = 0.001
    lr_drop_factor: float = 0.1
    lr_drop_period: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.optimizer != "sgdm":
            raise ConfigError(f"unsupported optimizer '{self.optimizer}'")
        if self.loss != "cross_entropy":
            raise ConfigError(f"unsupported loss '{self.loss}'")
        for name in ("momentum", "batch_size", "max_epochs", "learning_rate",
                     "l2_regularization", "lr_drop_factor", "lr_drop_period"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


def learning_rate_at(epoch: int, config: TrainConfig) -> float:
    """Stepped schedule; epochs are 1-indexed (drops land at 21, 41, ...)."""
    drops = (epoch - 1) // config.lr_drop_period
    return config.learning_rate * config.lr_drop_factor**drops


@dataclass
class TrainResult:
    state: dict                  # weights at the best validation accuracy
    log: list                    # "epoch, lr, trainLoss, valAccuracy" lines
    best_epoch: int
    best_val_accuracy: float


def evaluate_accuracy(net: Network, x, y, batch_size=32) -> float:
    hits = 0
    for lo in range(0, len(y), batch_size):
        pred, _ = net.predict(x[lo:lo + batch_size])
        hits += int((pred == y[lo:lo + batch_size]).sum())
    return hits / len(y)


def train(spec: ModelSpec, train_data, val_data, config: TrainConfig,
          dtype=np.float64) -> TrainResult:
    """Train a model spec; deterministic for a fixed seed and thread count.

    ``train_data`` and ``val_data`` are (inputs, labels) pairs with inputs
    shaped (records,) + spec.input_shape. One generator drives weight
    initialization, epoch shuffling, and dropout masks, in that order.
    """
    x_train, y_train = train_data
    x_val, y_val = val_data
    rng = np.random.default_rng(config.seed)
    net = build(spec, rng=rng, dtype=dtype)

    velocity = {key: np.zeros_like(layer.params[name])
                for key, layer, name in net.parameter_items()}
    best_state = net.state_dict()
    best_acc = -1.0
    best_epoch = 0
    log = []
    n = len(y_train)
    for epoch in range(1, config.max_epochs + 1):
        lr = learning_rate_at(epoch, config)
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            try:
                probs = net.forward(x_train[idx], train=True, rng=rng)
                loss = cross_entropy(probs, y_train[idx])
            except NumericError as exc:
                raise TrainingError(f"diverged at epoch {epoch}: {exc}",
                                    epoch=epoch) from exc
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            epoch_loss += loss * len(idx)
            net.backward(cross_entropy_grad(probs, y_train[idx]).astype(probs.dtype))
            for key, layer, name in net.parameter_items():
                l2 = config.l2_regularization if name in layer.l2_params else 0.0
                w, v = sgdm_step(layer.params[name], velocity[key],
                                 layer.grads[name], lr, config.momentum, l2)
                layer.params[name][...] = w
                velocity[key] = v
        epoch_loss /= n
        try:
            val_acc = evaluate_accuracy(net, x_val, y_val, config.batch_size)
        except NumericError as exc:
            raise TrainingError(f"diverged at epoch {epoch}: {exc}", epoch=epoch) from exc
        log.append(f"{epoch}, {lr:.8g}, {epoch_loss:.6f}, {val_acc:.4f}")
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_state = net.state_dict()
    return TrainResult(state=best_state, log=log,
                       best_epoch=best_epoch, best_val_accuracy=best_acc)
