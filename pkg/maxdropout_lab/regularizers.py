"""Dropout, MaxDropout and MaxDropoutV2 forward/backward passes.

MaxDropout drops the positions whose min-max normalized activation exceeds ``1 - rate``.
MaxDropoutV2 first sums the tensor over the channel axis and thresholds the normalized n x h x w
map, so the same spatial positions are dropped in every channel and only n*h*w comparisons are made.
"""

import dataclasses
import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .config import DEFAULT_RATE, DEFAULT_SEED
from .errors import ConfigError, ShapeError
from .tensor import DTYPE, Rng, Scope, Tensor, broadcast_mul, check_shape, minmax_array, sum_axis1

_VARIANT_ALIASES = {
    "dropout": "dropout",
    "max_dropout": "max_dropout",
    "maxdropout": "max_dropout",
    "v1": "max_dropout",
    "max_dropout_v2": "max_dropout_v2",
    "maxdropoutv2": "max_dropout_v2",
    "maxdropout_v2": "max_dropout_v2",
    "v2": "max_dropout_v2",
}


class Variant(str, enum.Enum):
    DROPOUT = "dropout"
    MAX_DROPOUT = "max_dropout"
    MAX_DROPOUT_V2 = "max_dropout_v2"

    @classmethod
    def parse(cls, text: Union[str, "Variant"]) -> "Variant":
        if isinstance(text, Variant):
            return text
        key = str(text).strip().lower().replace("-", "_")
        if key not in _VARIANT_ALIASES:
            choices = ", ".join(v.value for v in cls)
            raise ConfigError(f"Unknown variant {text!r}; expected one of {choices}")
        return cls(_VARIANT_ALIASES[key])


class Mode(str, enum.Enum):
    TRAIN = "train"
    INFER = "infer"


class MaskKind(str, enum.Enum):
    FULL = "full"
    SPATIAL = "spatial"


def _parse_enum(enum_cls, value, field):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).strip().lower().replace("-", "_"))
    except ValueError:
        choices = ", ".join(v.value for v in enum_cls)
        raise ConfigError(f"Invalid {field} {value!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class DropConfig:
    variant: Variant
    rate: float = DEFAULT_RATE
    mode: Mode = Mode.TRAIN
    scope: Scope = Scope.PER_SAMPLE
    seed: int = DEFAULT_SEED
    # MaxDropout/V2 survivors are not rescaled unless asked; Dropout always is.
    rescale: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "mode", _parse_enum(Mode, self.mode, "mode"))
        object.__setattr__(self, "scope", _parse_enum(Scope, self.scope, "scope"))
        try:
            rate = float(self.rate)
        except (TypeError, ValueError):
            raise ConfigError(f"Drop rate must be a number, got {self.rate!r}") from None
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"Drop rate must lie in [0, 1), got {rate}")
        object.__setattr__(self, "rate", rate)
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        object.__setattr__(self, "seed", seed)

    @property
    def threshold(self) -> np.float32:
        return DTYPE(1.0 - self.rate)

    @property
    def survivor_scale(self) -> float:
        if self.variant is Variant.DROPOUT or self.rescale:
            return 1.0 / (1.0 - self.rate)
        return 1.0

    def with_mode(self, mode: Union[Mode, str]) -> "DropConfig":
        return dataclasses.replace(self, mode=mode)


@dataclass(frozen=True)
class DropMask:
    kind: MaskKind
    values: Tensor

    def __post_init__(self):
        if self.kind is MaskKind.SPATIAL and self.values.shape[1] != 1:
            raise ShapeError(f"Spatial mask must have one channel, got shape {self.values.shape}")

    @classmethod
    def keep_all(cls, kind: MaskKind, shape: Sequence[int]) -> "DropMask":
        n, c, h, w = check_shape(shape)
        if kind is MaskKind.SPATIAL:
            c = 1
        return cls(kind, Tensor.ones((n, c, h, w)))

    def is_binary(self) -> bool:
        data = self.values.data
        return bool(np.all((data == 0) | (data == 1)))

    def dropped_offsets(self) -> np.ndarray:
        return np.flatnonzero(self.values.data == 0)

    def dropped_fraction(self) -> float:
        return 1.0 - float(self.values.data.mean(dtype=np.float64))

    def expand(self, channels: int) -> Tensor:
        """Materialize a spatial mask as the full (n,c,h,w) mask."""
        if self.kind is MaskKind.FULL:
            return self.values
        return Tensor._wrap(np.repeat(self.values.data, channels, axis=1))


class ComparisonCounter:
    """Counts threshold comparisons performed by the mask kernels."""

    def __init__(self):
        self.count = 0

    def add(self, n: int):
        self.count += int(n)

    def reset(self):
        self.count = 0


def analytic_comparisons(variant: Union[Variant, str], shape: Sequence[int]) -> int:
    n, c, h, w = check_shape(shape)
    if Variant.parse(variant) is Variant.MAX_DROPOUT_V2:
        return n * h * w
    return n * c * h * w


def _require(cfg: DropConfig, variant: Variant):
    if cfg.variant is not variant:
        raise ConfigError(f"Expected a {variant.value} config, got {cfg.variant.value}")


def _keep_where_not_above(norm: np.ndarray, threshold, counter: Optional[ComparisonCounter]) -> np.ndarray:
    if counter is not None:
        counter.add(norm.size)
    return (~(norm > threshold)).astype(DTYPE)


def _scaled(arr: np.ndarray, factor: float) -> np.ndarray:
    if factor != 1.0:
        arr *= DTYPE(factor)
    return arr


def dropout_mask(
    t: Tensor, cfg: DropConfig, rng: Optional[Rng] = None, counter: Optional[ComparisonCounter] = None
) -> DropMask:
    """Keep each element independently with probability 1 - rate."""
    _require(cfg, Variant.DROPOUT)
    if rng is None:
        rng = Rng(cfg.seed)
    draws = rng.random_array(t.shape)
    if counter is not None:
        counter.add(draws.size)
    return DropMask(MaskKind.FULL, Tensor._wrap((draws >= DTYPE(cfg.rate)).astype(DTYPE)))


def dropout_forward(
    t: Tensor, cfg: DropConfig, rng: Optional[Rng] = None, counter: Optional[ComparisonCounter] = None
) -> Tuple[Tensor, DropMask]:
    _require(cfg, Variant.DROPOUT)
    if cfg.mode is Mode.INFER:
        return t, DropMask.keep_all(MaskKind.FULL, t.shape)
    mask = dropout_mask(t, cfg, rng, counter)
    out = _scaled(t.data * mask.values.data, cfg.survivor_scale)
    return Tensor._wrap(out), mask


def max_dropout_mask(t: Tensor, cfg: DropConfig, counter: Optional[ComparisonCounter] = None) -> DropMask:
    _require(cfg, Variant.MAX_DROPOUT)
    norm = minmax_array(t.data, cfg.scope)
    keep = _keep_where_not_above(norm, cfg.threshold, counter)
    return DropMask(MaskKind.FULL, Tensor._wrap(keep))


def max_dropout_forward(
    t: Tensor, cfg: DropConfig, counter: Optional[ComparisonCounter] = None
) -> Tuple[Tensor, DropMask]:
    _require(cfg, Variant.MAX_DROPOUT)
    if cfg.mode is Mode.INFER:
        return t, DropMask.keep_all(MaskKind.FULL, t.shape)
    mask = max_dropout_mask(t, cfg, counter)
    out = _scaled(t.data * mask.values.data, cfg.survivor_scale)
    return Tensor._wrap(out), mask


def max_dropout_v2_mask(t: Tensor, cfg: DropConfig, counter: Optional[ComparisonCounter] = None) -> DropMask:
    _require(cfg, Variant.MAX_DROPOUT_V2)
    norm = minmax_array(sum_axis1(t).data, cfg.scope)
    keep = _keep_where_not_above(norm, cfg.threshold, counter)
    return DropMask(MaskKind.SPATIAL, Tensor._wrap(keep))


def max_dropout_v2_forward(
    t: Tensor, cfg: DropConfig, counter: Optional[ComparisonCounter] = None
) -> Tuple[Tensor, DropMask]:
    _require(cfg, Variant.MAX_DROPOUT_V2)
    if cfg.mode is Mode.INFER:
        return t, DropMask.keep_all(MaskKind.SPATIAL, t.shape)
    mask = max_dropout_v2_mask(t, cfg, counter)
    out = broadcast_mul(t, mask.values)
    if cfg.survivor_scale != 1.0:
        out = Tensor._wrap(_scaled(out.data.copy(), cfg.survivor_scale))
    return out, mask


def drop_mask(
    t: Tensor, cfg: DropConfig, rng: Optional[Rng] = None, counter: Optional[ComparisonCounter] = None
) -> DropMask:
    """Training-mode mask of any variant, without applying it."""
    if cfg.variant is Variant.DROPOUT:
        return dropout_mask(t, cfg, rng, counter)
    if cfg.variant is Variant.MAX_DROPOUT:
        return max_dropout_mask(t, cfg, counter)
    return max_dropout_v2_mask(t, cfg, counter)


def apply_drop(
    t: Tensor, cfg: DropConfig, rng: Optional[Rng] = None, counter: Optional[ComparisonCounter] = None
) -> Tuple[Tensor, DropMask]:
    if cfg.variant is Variant.DROPOUT:
        return dropout_forward(t, cfg, rng=rng, counter=counter)
    if cfg.variant is Variant.MAX_DROPOUT:
        return max_dropout_forward(t, cfg, counter=counter)
    return max_dropout_v2_forward(t, cfg, counter=counter)


def drop_backward(upstream: Tensor, mask: DropMask, cfg: DropConfig) -> Tensor:
    """Gradient through a drop layer; the mask is a constant of the forward pass."""
    if cfg.mode is Mode.INFER:
        return upstream
    if mask.kind is MaskKind.SPATIAL:
        grad = broadcast_mul(upstream, mask.values)
    else:
        if mask.values.shape != upstream.shape:
            raise ShapeError(f"drop_backward: mask shape {mask.values.shape} vs upstream {upstream.shape}")
        grad = Tensor._wrap(upstream.data * mask.values.data)
    if cfg.survivor_scale != 1.0:
        grad = Tensor._wrap(_scaled(grad.data.copy(), cfg.survivor_scale))
    return grad
