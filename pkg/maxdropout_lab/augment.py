"""Input-space regularizers and the crop/flip augmentation pipeline.

Every op takes a single image, a (1, C, H, W) tensor with C in {1, 3} and values in [0, 1],
plus the Rng that makes its choices, and returns a new image.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .config import ERASING_AREA, ERASING_ASPECT, ERASING_ATTEMPTS
from .errors import ConfigError, ShapeError
from .tensor import Rng, Tensor


@dataclass(frozen=True)
class Crop:
    out_h: int
    out_w: int


@dataclass(frozen=True)
class HFlip:
    prob: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ConfigError(f"Flip probability must lie in [0, 1], got {self.prob}")


@dataclass(frozen=True)
class Cutout:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ConfigError(f"Cutout size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class RandomErasing:
    area_lo: float = ERASING_AREA[0]
    area_hi: float = ERASING_AREA[1]
    aspect_lo: float = ERASING_ASPECT[0]
    aspect_hi: float = ERASING_ASPECT[1]

    def __post_init__(self):
        if not 0.0 < self.area_lo <= self.area_hi < 1.0:
            raise ConfigError(f"Erasing area fraction needs 0 < lo <= hi < 1, got [{self.area_lo}, {self.area_hi}]")
        if not 0.0 < self.aspect_lo <= self.aspect_hi:
            raise ConfigError(f"Erasing aspect needs 0 < lo <= hi, got [{self.aspect_lo}, {self.aspect_hi}]")


@dataclass(frozen=True)
class Resize:
    out_h: int
    out_w: int


Step = Union[Crop, HFlip, Cutout, RandomErasing, Resize]


@dataclass(frozen=True)
class AugmentPlan:
    steps: Tuple[Step, ...] = ()
    seed: int = 0

    @property
    def is_empty(self) -> bool:
        return not self.steps

    def apply(self, img: Tensor, rng: Rng) -> Tensor:
        return apply_plan(self, img, rng)

    def describe(self) -> str:
        return ",".join(_describe_step(step) for step in self.steps) or "none"


def check_image(img: Tensor) -> Tuple[int, int, int]:
    n, c, h, w = img.shape
    if n != 1 or c not in (1, 3):
        raise ShapeError(f"Expected an image of shape (1, 1|3, H, W), got {img.shape}")
    return c, h, w


def cutout(img: Tensor, size: int, rng: Rng) -> Tensor:
    """Zero a size x size square centered on a uniform pixel, clipped to the image."""
    if size < 1:
        raise ConfigError(f"Cutout size must be >= 1, got {size}")
    _, h, w = check_image(img)
    cy = rng.integers(0, h)
    cx = rng.integers(0, w)
    y0, x0 = cy - size // 2, cx - size // 2
    out = img.data.copy()
    out[:, :, max(y0, 0) : min(y0 + size, h), max(x0, 0) : min(x0 + size, w)] = 0.0
    return Tensor._wrap(out)


def random_erasing(
    img: Tensor, params: RandomErasing, rng: Rng, attempts: int = ERASING_ATTEMPTS
) -> Tensor:
    """Overwrite one random rectangle with uniform noise; unchanged if no placement fits."""
    c, h, w = check_image(img)
    for _ in range(attempts):
        area = rng.uniform(params.area_lo, params.area_hi) * h * w
        aspect = rng.uniform(params.aspect_lo, params.aspect_hi)
        eh = int(round(math.sqrt(area * aspect)))
        ew = int(round(math.sqrt(area / aspect)))
        if 1 <= eh <= h and 1 <= ew <= w:
            top = rng.integers(0, h - eh + 1)
            left = rng.integers(0, w - ew + 1)
            out = img.data.copy()
            out[:, :, top : top + eh, left : left + ew] = rng.random_array((1, c, eh, ew))
            return Tensor._wrap(out)
    return img


def random_crop(img: Tensor, out_h: int, out_w: int, rng: Rng) -> Tensor:
    _, h, w = check_image(img)
    if not (1 <= out_h <= h and 1 <= out_w <= w):
        raise ShapeError(f"Crop {out_h}x{out_w} does not fit image {h}x{w}")
    top = rng.integers(0, h - out_h + 1)
    left = rng.integers(0, w - out_w + 1)
    return Tensor._wrap(img.data[:, :, top : top + out_h, left : left + out_w].copy())


def hflip(img: Tensor, prob: float, rng: Rng) -> Tensor:
    check_image(img)
    if rng.random() < prob:
        return Tensor._wrap(img.data[:, :, :, ::-1].copy())
    return img


def resize_nearest(img: Tensor, out_h: int, out_w: int) -> Tensor:
    _, h, w = check_image(img)
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"Resize target must be positive, got {out_h}x{out_w}")
    if (out_h, out_w) == (h, w):
        return img
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    return Tensor._wrap(img.data[:, :, rows][:, :, :, cols])


def apply_plan(plan: AugmentPlan, img: Tensor, rng: Rng) -> Tensor:
    for step in plan.steps:
        if isinstance(step, Crop):
            img = random_crop(img, step.out_h, step.out_w, rng)
        elif isinstance(step, HFlip):
            img = hflip(img, step.prob, rng)
        elif isinstance(step, Cutout):
            img = cutout(img, step.size, rng)
        elif isinstance(step, RandomErasing):
            img = random_erasing(img, step, rng)
        elif isinstance(step, Resize):
            img = resize_nearest(img, step.out_h, step.out_w)
        else:
            raise ConfigError(f"Unknown augmentation step {step!r}")
    return img


def _parse_hw(value: str, key: str) -> Tuple[int, int]:
    parts = value.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{key}: expected HxW, got {value!r}") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise ConfigError(f"{key}: expected HxW with positive sizes, got {value!r}")
    return dims[0], dims[1]


def _parse_float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def parse_plan(text: str, seed: int = 0) -> AugmentPlan:
    """
    Parse a plan such as ``crop=28x28,hflip=0.5,cutout=8,erase=0.02:0.33:0.3:3.3``.

    ``none`` or an empty string gives the empty plan; ``hflip`` and ``erase`` alone use defaults.
    """
    text = (text or "").strip()
    if text.lower() in ("", "none"):
        return AugmentPlan((), seed)

    steps = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        key, _, value = token.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key == "crop":
            steps.append(Crop(*_parse_hw(value, key)))
        elif key == "resize":
            steps.append(Resize(*_parse_hw(value, key)))
        elif key == "hflip":
            steps.append(HFlip(_parse_float(value, key)) if value else HFlip())
        elif key == "cutout":
            try:
                steps.append(Cutout(int(value)))
            except ValueError:
                raise ConfigError(f"cutout: expected an integer size, got {value!r}") from None
        elif key in ("erase", "random_erasing"):
            if not value:
                steps.append(RandomErasing())
                continue
            parts = [_parse_float(p, key) for p in value.split(":")]
            if len(parts) != 4:
                raise ConfigError(f"{key}: expected area_lo:area_hi:aspect_lo:aspect_hi, got {value!r}")
            steps.append(RandomErasing(*parts))
        else:
            raise ConfigError(f"Unknown augmentation step {key!r}")
    return AugmentPlan(tuple(steps), seed)


def _describe_step(step: Step) -> str:
    if isinstance(step, Crop):
        return f"crop={step.out_h}x{step.out_w}"
    if isinstance(step, Resize):
        return f"resize={step.out_h}x{step.out_w}"
    if isinstance(step, HFlip):
        return f"hflip={step.prob:g}"
    if isinstance(step, Cutout):
        return f"cutout={step.size}"
    return f"erase={step.area_lo:g}:{step.area_hi:g}:{step.aspect_lo:g}:{step.aspect_hi:g}"
