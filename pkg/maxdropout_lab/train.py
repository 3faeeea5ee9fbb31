"""Toy-scale training harness for the drop variants."""

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .augment import AugmentPlan, apply_plan
from .config import (
    DEFAULT_SEED,
    MAX_WORKERS,
    PUBLISHED_DECAY_EPOCHS,
    PUBLISHED_EPOCHS,
    PUBLISHED_LR0,
    PUBLISHED_LR_DECAY_FACTOR,
    PUBLISHED_MOMENTUM,
    PUBLISHED_WEIGHT_DECAY,
    TOY_BATCH_SIZE,
    TOY_DECAY_EPOCHS,
    TOY_EPOCHS,
    TOY_LR0,
    TOY_TRAIN_SIZE,
    TOY_VAL_SIZE,
)
from .data import Split, SyntheticDataset, iter_batches
from .errors import ConfigError, DivergenceError, ShapeError
from .io_utils import write_csv
from .logger import logger
from .net import ToyNet, softmax_cross_entropy
from .optim import SGD, lr_at
from .regularizers import DropConfig
from .tensor import Rng, Tensor
from .utils import Stream, derive_seed

EVAL_BATCH_SIZE = 250


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = TOY_LR0
    momentum: float = PUBLISHED_MOMENTUM
    weight_decay: float = PUBLISHED_WEIGHT_DECAY
    lr_decay_factor: float = PUBLISHED_LR_DECAY_FACTOR
    decay_epochs: Tuple[int, ...] = TOY_DECAY_EPOCHS
    epochs: int = TOY_EPOCHS
    batch_size: int = TOY_BATCH_SIZE
    drop: Optional[DropConfig] = None
    augment: AugmentPlan = field(default_factory=AugmentPlan)
    seed: int = DEFAULT_SEED
    train_size: int = TOY_TRAIN_SIZE
    val_size: int = TOY_VAL_SIZE
    workers: int = MAX_WORKERS

    def __post_init__(self):
        object.__setattr__(self, "decay_epochs", tuple(sorted(int(d) for d in self.decay_epochs)))
        for name in ("lr0", "lr_decay_factor"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        for name in ("epochs", "batch_size", "train_size", "val_size", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if any(d < 0 for d in self.decay_epochs):
            raise ConfigError(f"decay_epochs must be >= 0, got {self.decay_epochs}")

    @classmethod
    def published(cls, **overrides) -> "TrainConfig":
        """The published protocol: lr 0.1, decays at 60/120/160 by 0.2, 200 epochs."""
        values = dict(
            lr0=PUBLISHED_LR0,
            momentum=PUBLISHED_MOMENTUM,
            weight_decay=PUBLISHED_WEIGHT_DECAY,
            lr_decay_factor=PUBLISHED_LR_DECAY_FACTOR,
            decay_epochs=PUBLISHED_DECAY_EPOCHS,
            epochs=PUBLISHED_EPOCHS,
        )
        values.update(overrides)
        return cls(**values)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    epoch_seconds: float


@dataclass
class MetricsLog:
    COLUMNS = ("epoch", "lr", "train_loss", "train_acc", "val_loss", "val_acc", "epoch_seconds")

    rows: List[EpochMetrics] = field(default_factory=list)

    def append(self, row: EpochMetrics):
        self.rows.append(row)

    @property
    def final(self) -> EpochMetrics:
        if not self.rows:
            raise ValueError("MetricsLog is empty")
        return self.rows[-1]

    @property
    def total_seconds(self) -> float:
        return float(sum(r.epoch_seconds for r in self.rows))

    @property
    def mean_epoch_seconds(self) -> float:
        return self.total_seconds / len(self.rows) if self.rows else 0.0

    def column(self, name: str) -> List[float]:
        return [getattr(r, name) for r in self.rows]

    def write_csv(self, path: Union[str, Path], include_timing: bool = True) -> Path:
        columns = self.COLUMNS if include_timing else self.COLUMNS[:-1]
        rows = ([_fmt(getattr(r, c)) for c in columns] for r in self.rows)
        return write_csv(path, columns, rows)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def check_plan_output(plan: AugmentPlan, input_shape: Sequence[int]):
    """Reject plans whose output shape does not match the network input."""
    if plan.is_empty:
        return
    blank = Tensor.zeros((1,) + tuple(input_shape))
    out = apply_plan(plan, blank, Rng(0))
    if out.shape[1:] != tuple(input_shape):
        raise ConfigError(
            f"Augment plan '{plan.describe()}' turns {tuple(input_shape)} images into {out.shape[1:]}; "
            "add a resize step or adjust the crop"
        )


def _evaluate(net: ToyNet, split: Split, batch_size: int = EVAL_BATCH_SIZE) -> Tuple[float, float]:
    total_loss = 0.0
    correct = 0
    for start in range(0, len(split), batch_size):
        x = split.images[start : start + batch_size]
        y = split.labels[start : start + batch_size]
        logits = net.forward(x, train=False)
        loss, _ = softmax_cross_entropy(logits, y)
        total_loss += loss * len(y)
        correct += int((logits.argmax(axis=1) == y).sum())
    return total_loss / len(split), correct / len(split)


def evaluate(net: ToyNet, split: Split) -> float:
    """Accuracy with every drop layer in inference mode."""
    return _evaluate(net, split)[1]


def train(cfg: TrainConfig, data: Optional[SyntheticDataset] = None, net: Optional[ToyNet] = None) -> MetricsLog:
    if data is None:
        data = SyntheticDataset.generate(cfg.seed, cfg.train_size, cfg.val_size)
    if net is None:
        net = ToyNet(cfg.drop, seed=cfg.seed, input_shape=data.train.images.shape[1:])
    if tuple(data.train.images.shape[1:]) != net.input_shape:
        raise ShapeError(f"Dataset images {data.train.images.shape[1:]} do not match net input {net.input_shape}")
    check_plan_output(cfg.augment, net.input_shape)

    drop_name = cfg.drop.variant.value if cfg.drop else "none"
    drop_rate = cfg.drop.rate if cfg.drop else 0.0
    logger.info(
        f"Training ToyNet ({net.param_count} params) with drop={drop_name} rate={drop_rate:g} "
        f"augment={cfg.augment.describe()} epochs={cfg.epochs} seed={cfg.seed}"
    )

    optimizer = SGD(cfg.momentum, cfg.weight_decay)
    order_rng = Rng(derive_seed(cfg.seed, Stream.ORDER))
    log = MetricsLog()

    for epoch in range(cfg.epochs):
        start = time.perf_counter()
        lr = lr_at(cfg, epoch)
        order = order_rng.permutation(len(data.train))

        total_loss = 0.0
        correct = 0
        seen = 0
        batches = iter_batches(data.train, cfg.batch_size, order, cfg.augment, epoch, workers=cfg.workers)
        for step, (x, y) in enumerate(batches):
            logits = net.forward(x, train=True)
            loss, dlogits = softmax_cross_entropy(logits, y)
            if not np.isfinite(loss):
                raise DivergenceError(epoch, step, loss)
            net.backward(dlogits)
            optimizer.step(net.params(), lr)

            total_loss += loss * len(y)
            correct += int((logits.argmax(axis=1) == y).sum())
            seen += len(y)

        val_loss, val_acc = _evaluate(net, data.val)
        if not np.isfinite(val_loss):
            raise DivergenceError(epoch, -1, val_loss)

        row = EpochMetrics(
            epoch=epoch,
            lr=lr,
            train_loss=total_loss / seen,
            train_acc=correct / seen,
            val_loss=val_loss,
            val_acc=val_acc,
            epoch_seconds=time.perf_counter() - start,
        )
        log.append(row)
        logger.info(
            f"Epoch {epoch + 1}/{cfg.epochs} lr={lr:g} train_loss={row.train_loss:.4f} "
            f"train_acc={row.train_acc:.4f} val_loss={row.val_loss:.4f} val_acc={row.val_acc:.4f} "
            f"({row.epoch_seconds:.2f}s)"
        )

    logger.info(f"Total time {log.total_seconds:.2f}s, {log.mean_epoch_seconds:.2f}s per epoch")
    return log
