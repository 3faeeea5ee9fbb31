"""Synthetic two-class image dataset and the augmenting batch loader."""

from dataclasses import dataclass
from typing import Iterator, Tuple

import lox
import numpy as np

from .augment import AugmentPlan, apply_plan
from .config import LOADER_QUEUE_DEPTH, TOY_CHANNELS, TOY_IMAGE_SIZE, TOY_TRAIN_SIZE, TOY_VAL_SIZE
from .errors import ConfigError
from .tensor import DTYPE, Rng, Tensor
from .utils import Stream, derive_seed

CENTER_CLASS = 0
CORNER_CLASS = 1


@dataclass
class Split:
    images: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)


@dataclass
class SyntheticDataset:
    """Bright blob at the image center (class 0) vs. in a random corner (class 1), plus uniform noise."""

    train: Split
    val: Split
    seed: int

    @classmethod
    def generate(
        cls,
        seed: int = 0,
        train_size: int = TOY_TRAIN_SIZE,
        val_size: int = TOY_VAL_SIZE,
        image_size: int = TOY_IMAGE_SIZE,
        channels: int = TOY_CHANNELS,
    ) -> "SyntheticDataset":
        if train_size < 2 or val_size < 2:
            raise ConfigError(f"Need at least 2 samples per split, got train={train_size} val={val_size}")
        return cls(
            train=make_split(Rng(derive_seed(seed, Stream.TRAIN_SPLIT)), train_size, image_size, channels),
            val=make_split(Rng(derive_seed(seed, Stream.VAL_SPLIT)), val_size, image_size, channels),
            seed=seed,
        )


def make_split(rng: Rng, size: int, image_size: int, channels: int) -> Split:
    labels = rng.permutation(np.arange(size) % 2).astype(np.int64)

    margin = max(image_size // 7, 1)
    near, far = margin, image_size - 1 - margin
    center = (image_size - 1) / 2.0
    corners = np.array([(near, near), (near, far), (far, near), (far, far)], dtype=np.float64)

    picks = corners[[rng.integers(0, 4) for _ in range(size)]]
    cy = np.where(labels == CENTER_CLASS, center, picks[:, 0])
    cx = np.where(labels == CENTER_CLASS, center, picks[:, 1])
    jitter = rng.uniform_array(-1.5, 1.5, (size, 2)).astype(np.float64)
    cy = cy + jitter[:, 0]
    cx = cx + jitter[:, 1]
    sigma = 2.5 + rng.uniform_array(0.0, 1.0, (size,)).astype(np.float64)

    yy, xx = np.mgrid[0:image_size, 0:image_size]
    dist2 = (yy[None] - cy[:, None, None]) ** 2 + (xx[None] - cx[:, None, None]) ** 2
    blob = np.exp(-dist2 / (2.0 * sigma[:, None, None] ** 2))

    brightness = rng.uniform_array(0.6, 1.0, (size, channels, 1, 1))
    noise = rng.random_array((size, channels, image_size, image_size)) * DTYPE(0.3)
    images = np.clip(0.7 * blob[:, None].astype(DTYPE) * brightness + noise, 0.0, 1.0).astype(DTYPE)
    return Split(images=images, labels=labels)


def augment_batch(images: np.ndarray, plan: AugmentPlan, rng: Rng) -> np.ndarray:
    if plan.is_empty:
        return images
    out = [apply_plan(plan, Tensor._wrap(images[i : i + 1].copy()), rng).data[0] for i in range(len(images))]
    return np.stack(out)


def iter_batches(
    split: Split,
    batch_size: int,
    order: np.ndarray,
    plan: AugmentPlan,
    epoch: int,
    workers: int = 1,
    queue_depth: int = LOADER_QUEUE_DEPTH,
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    Yield (images, labels) batches in `order`, each exactly once.

    Augmentation draws come from `plan.seed`: batch `i` of an epoch gets its own derived stream,
    so results do not depend on how many workers run. With workers > 1 at most `queue_depth` batches are prepared ahead.
    """
    starts = range(0, len(order), batch_size)
    batches = [order[s : s + batch_size] for s in starts]

    def prepare(batch_index):
        idx = batches[batch_index]
        rng = Rng(derive_seed(plan.seed, Stream.AUGMENT, epoch, batch_index))
        images = augment_batch(split.images[idx], plan, rng)
        return images, split.labels[idx]

    if workers <= 1 or plan.is_empty:
        for batch_index in range(len(batches)):
            yield prepare(batch_index)
        return

    for window in range(0, len(batches), queue_depth):
        pool = lox.thread(workers)(prepare)
        for batch_index in range(window, min(window + queue_depth, len(batches))):
            pool.scatter(batch_index)
        for batch in pool.gather():
            yield batch
