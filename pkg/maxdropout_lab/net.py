"""Toy CNN with hand-written backpropagation.

conv(3->8) -> ReLU -> DROP -> maxpool -> conv(8->16) -> ReLU -> DROP -> maxpool -> flatten -> dense -> softmax

Layers work on raw NCHW numpy arrays; a DROP slot delegates mask generation to ``regularizers``.
"""

import copy
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import TOY_CHANNELS, TOY_CLASSES, TOY_IMAGE_SIZE
from .errors import ShapeError
from .regularizers import DropConfig, DropMask, Mode, drop_backward, drop_mask
from .tensor import DTYPE, Rng, Tensor
from .utils import Stream, derive_seed


@dataclass
class Param:
    name: str
    value: np.ndarray
    grad: np.ndarray

    @classmethod
    def create(cls, name: str, value: np.ndarray) -> "Param":
        return cls(name, value, np.zeros_like(value))


def he_uniform(rng: Rng, shape: Sequence[int], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform_array(-limit, limit, shape)


class Layer:
    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> List[Param]:
        return []


class Conv2D(Layer):
    """Stride-1 convolution with zero padding, computed as an im2col matrix product."""

    def __init__(self, name: str, c_in: int, c_out: int, rng: Rng, kernel: int = 3, pad: int = 1):
        self.kernel = kernel
        self.pad = pad
        fan_in = c_in * kernel * kernel
        self.weight = Param.create(f"{name}.weight", he_uniform(rng, (c_out, c_in, kernel, kernel), fan_in))
        self.bias = Param.create(f"{name}.bias", np.zeros(c_out, dtype=DTYPE))
        self._cache = None

    def forward(self, x, train=False):
        b, c, h, w = x.shape
        k, p = self.kernel, self.pad
        c_out = self.weight.value.shape[0]
        if c != self.weight.value.shape[1]:
            raise ShapeError(f"{self.weight.name}: expected {self.weight.value.shape[1]} channels, got {c}")
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        windows = sliding_window_view(xp, (k, k), axis=(2, 3))
        h_out, w_out = windows.shape[2], windows.shape[3]
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * h_out * w_out, c * k * k)
        out = cols @ self.weight.value.reshape(c_out, -1).T + self.bias.value
        self._cache = (x.shape, xp.shape, cols)
        return np.ascontiguousarray(out.reshape(b, h_out, w_out, c_out).transpose(0, 3, 1, 2))

    def backward(self, dy):
        (b, c, h, w), xp_shape, cols = self._cache
        k, p = self.kernel, self.pad
        _, c_out, h_out, w_out = dy.shape
        dy2 = dy.transpose(0, 2, 3, 1).reshape(-1, c_out)
        self.weight.grad = (dy2.T @ cols).reshape(self.weight.value.shape)
        self.bias.grad = dy2.sum(axis=0)
        dcols = (dy2 @ self.weight.value.reshape(c_out, -1)).reshape(b, h_out, w_out, c, k, k)
        dxp = np.zeros(xp_shape, dtype=dcols.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + h_out, j : j + w_out] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, p : p + h, p : p + w]

    def params(self):
        return [self.weight, self.bias]


class ReLU(Layer):
    def __init__(self):
        self._active = None

    def forward(self, x, train=False):
        self._active = x > 0
        return np.where(self._active, x, 0).astype(x.dtype, copy=False)

    def backward(self, dy):
        return dy * self._active


class MaxPool2x2(Layer):
    def __init__(self):
        self._cache = None

    def forward(self, x, train=False):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"MaxPool2x2 needs even spatial dims, got {h}x{w}")
        windows = x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
        winner = windows.argmax(axis=-1)
        self._cache = (x.shape, winner)
        return np.take_along_axis(windows, winner[..., np.newaxis], axis=-1)[..., 0]

    def backward(self, dy):
        (b, c, h, w), winner = self._cache
        dwin = np.zeros((b, c, h // 2, w // 2, 4), dtype=dy.dtype)
        np.put_along_axis(dwin, winner[..., np.newaxis], dy[..., np.newaxis], axis=-1)
        return dwin.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h, w)


class Flatten(Layer):
    def __init__(self):
        self._shape = None

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Dense(Layer):
    def __init__(self, name: str, d_in: int, d_out: int, rng: Rng):
        self.weight = Param.create(f"{name}.weight", he_uniform(rng, (d_in, d_out), d_in))
        self.bias = Param.create(f"{name}.bias", np.zeros(d_out, dtype=DTYPE))
        self._x = None

    def forward(self, x, train=False):
        if x.shape[1] != self.weight.value.shape[0]:
            raise ShapeError(f"{self.weight.name}: expected {self.weight.value.shape[0]} features, got {x.shape[1]}")
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, dy):
        self.weight.grad = self._x.T @ dy
        self.bias.grad = dy.sum(axis=0)
        return dy @ self.weight.value.T

    def params(self):
        return [self.weight, self.bias]


class DropLayer(Layer):
    """A DROP slot. ``cfg=None`` makes it the identity (no-drop baseline).

    Masks come from ``regularizers.drop_mask`` on a float32 view of the activations and are applied in the
    activation dtype; the gradient goes through ``drop_backward``.
    """

    def __init__(self, name: str, cfg: Optional[DropConfig], rng: Optional[Rng] = None):
        self.name = name
        self.cfg = cfg.with_mode(Mode.TRAIN) if cfg is not None else None
        self.rng = rng if rng is not None else (Rng(cfg.seed) if cfg is not None else None)
        self.train_applications = 0
        self.frozen = False
        self.last_mask: Optional[DropMask] = None
        self._applied = False

    def forward(self, x, train=False):
        self._applied = self.cfg is not None and train
        if not self._applied:
            return x
        self.train_applications += 1
        if not (self.frozen and self.last_mask is not None):
            self.last_mask = drop_mask(Tensor(x), self.cfg, rng=self.rng)
        mask = self.last_mask.expand(x.shape[1]).data.astype(x.dtype)
        scale = self.cfg.survivor_scale
        return x * mask if scale == 1.0 else x * (mask * x.dtype.type(scale))

    def backward(self, dy):
        if not self._applied:
            return dy
        return drop_backward(Tensor(dy), self.last_mask, self.cfg).data.astype(dy.dtype)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    b = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -float(log_probs[np.arange(b), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(b), labels] -= 1
    return loss, dlogits / b


def _drop_rng(drop: Optional[DropConfig], slot: int) -> Optional[Rng]:
    return Rng(derive_seed(drop.seed, Stream.DROP, slot)) if drop is not None else None


class ToyNet:
    def __init__(
        self,
        drop: Optional[DropConfig] = None,
        seed: int = 0,
        input_shape: Tuple[int, int, int] = (TOY_CHANNELS, TOY_IMAGE_SIZE, TOY_IMAGE_SIZE),
        num_classes: int = TOY_CLASSES,
    ):
        c, h, w = input_shape
        if h % 4 or w % 4:
            raise ShapeError(f"ToyNet needs spatial dims divisible by 4, got {h}x{w}")
        self.input_shape = tuple(input_shape)
        self.num_classes = num_classes
        init_rng = Rng(derive_seed(seed, Stream.INIT))
        self.drop1 = DropLayer("drop1", drop, _drop_rng(drop, 1))
        self.drop2 = DropLayer("drop2", drop, _drop_rng(drop, 2))
        self.layers: List[Layer] = [
            Conv2D("conv1", c, 8, init_rng),
            ReLU(),
            self.drop1,
            MaxPool2x2(),
            Conv2D("conv2", 8, 16, init_rng),
            ReLU(),
            self.drop2,
            MaxPool2x2(),
            Flatten(),
            Dense("dense", 16 * (h // 4) * (w // 4), num_classes, init_rng),
        ]

    @property
    def drop_layers(self) -> List[DropLayer]:
        return [self.drop1, self.drop2]

    @property
    def train_applications(self) -> int:
        return sum(layer.train_applications for layer in self.drop_layers)

    def params(self) -> List[Param]:
        return [p for layer in self.layers for p in layer.params()]

    @property
    def param_count(self) -> int:
        return sum(p.value.size for p in self.params())

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(f"ToyNet expects inputs (b, {self.input_shape}), got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x, train=False).argmax(axis=1)

    def freeze_masks(self, frozen: bool = True):
        """Reuse the most recent train-mode masks instead of recomputing them."""
        for layer in self.drop_layers:
            layer.frozen = frozen

    def cast(self, dtype) -> "ToyNet":
        for p in self.params():
            p.value = p.value.astype(dtype)
            p.grad = p.grad.astype(dtype)
        return self

    def snapshot(self) -> "ToyNet":
        return copy.deepcopy(self)
