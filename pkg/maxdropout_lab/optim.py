"""Step learning-rate schedule and SGD with Nesterov momentum and weight decay."""

from fractions import Fraction
from typing import Dict, Iterable, Tuple

import numpy as np

from .errors import ConfigError, ShapeError


def lr_at(cfg, epoch: int) -> float:
    """lr0 * decay_factor ** (number of decay epochs <= epoch).

    Evaluated on the decimal values so that e.g. 0.1 * 0.2 gives exactly 0.02.
    """
    if epoch < 0:
        raise ConfigError(f"Epoch must be >= 0, got {epoch}")
    decays = sum(1 for d in cfg.decay_epochs if d <= epoch)
    return float(Fraction(repr(float(cfg.lr0))) * Fraction(repr(float(cfg.lr_decay_factor))) ** decays)


def sgd_nesterov_step(
    param: np.ndarray,
    grad: np.ndarray,
    velocity: np.ndarray,
    lr: float,
    momentum: float,
    weight_decay: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One Nesterov update.

    g' = grad + weight_decay * param
    v' = momentum * v + g'
    param' = param - lr * (g' + momentum * v')
    """
    param = np.asarray(param)
    if not np.issubdtype(param.dtype, np.floating):
        param = param.astype(np.float64)
    grad = np.asarray(grad)
    velocity = np.asarray(velocity)
    if param.shape != grad.shape or param.shape != velocity.shape:
        raise ShapeError(f"Shapes disagree: param {param.shape}, grad {grad.shape}, velocity {velocity.shape}")
    cast = param.dtype.type
    g = grad + cast(weight_decay) * param
    v = cast(momentum) * velocity + g
    new_param = param - cast(lr) * (g + cast(momentum) * v)
    return new_param.astype(param.dtype, copy=False), v.astype(param.dtype, copy=False)


class SGD:
    def __init__(self, momentum: float, weight_decay: float):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self._velocity: Dict[str, np.ndarray] = {}

    def step(self, params: Iterable, lr: float):
        for p in params:
            v = self._velocity.get(p.name)
            if v is None or v.shape != p.value.shape or v.dtype != p.value.dtype:
                v = np.zeros_like(p.value)
            p.value, self._velocity[p.name] = sgd_nesterov_step(
                p.value, p.grad, v, lr, self.momentum, self.weight_decay
            )
