"""Drop-rate sweep: one toy training run per (variant, rate, repetition)."""

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import lox
import numpy as np

from .config import SWEEP_REPEATS, SWEEP_VARIANTS
from .errors import ConfigError
from .io_utils import write_csv
from .logger import logger
from .regularizers import DropConfig, Variant
from .train import TrainConfig, train

BASELINE = "none"


@dataclass(frozen=True)
class SweepPoint:
    variant: str
    rate: float
    repeat: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    point: SweepPoint
    final_train_acc: float
    final_val_acc: float
    final_val_loss: float
    total_seconds: float


@dataclass(frozen=True)
class SweepRow:
    COLUMNS = (
        "variant",
        "rate",
        "repeats",
        "mean_val_acc",
        "std_val_acc",
        "mean_val_error_pct",
        "mean_train_acc",
        "seeds",
    )

    variant: str
    rate: float
    repeats: int
    mean_val_acc: float
    std_val_acc: float
    mean_val_error_pct: float
    mean_train_acc: float
    seeds: tuple

    def csv_row(self) -> list:
        return [
            self.variant,
            f"{self.rate:.2f}",
            self.repeats,
            f"{self.mean_val_acc:.6f}",
            f"{self.std_val_acc:.6f}",
            f"{self.mean_val_error_pct:.4f}",
            f"{self.mean_train_acc:.6f}",
            " ".join(str(s) for s in self.seeds),
        ]


def build_points(
    rates: Sequence[float], variants: Iterable[Union[Variant, str]], repeats: int, base_seed: int, baseline: bool
) -> List[SweepPoint]:
    if not rates:
        raise ConfigError("Sweep needs at least one rate")
    if repeats < 1:
        raise ConfigError(f"Sweep needs at least one repetition, got {repeats}")
    names = [Variant.parse(v).value for v in variants]
    if not names and not baseline:
        raise ConfigError("Sweep needs at least one variant or the baseline")

    points = []
    for repeat in range(repeats):
        seed = base_seed + repeat
        if baseline:
            points.append(SweepPoint(BASELINE, 0.0, repeat, seed))
        for name in names:
            for rate in rates:
                points.append(SweepPoint(name, float(rate), repeat, seed))
    return points


def point_config(base_cfg: TrainConfig, point: SweepPoint) -> TrainConfig:
    """TrainConfig for one grid point; scope and rescale come from the base drop config if any.

    The point seed drives data, init, drop masks and augmentation alike.
    """
    augment = dataclasses.replace(base_cfg.augment, seed=point.seed)
    if point.variant == BASELINE:
        return base_cfg.replace(drop=None, augment=augment, seed=point.seed)
    if base_cfg.drop is not None:
        drop = dataclasses.replace(base_cfg.drop, variant=point.variant, rate=point.rate, seed=point.seed)
    else:
        drop = DropConfig(point.variant, rate=point.rate, seed=point.seed)
    return base_cfg.replace(drop=drop, augment=augment, seed=point.seed)


def run_point(base_cfg: TrainConfig, point: SweepPoint) -> SweepResult:
    """Train one grid point. Module-level so worker processes can pickle it."""
    log = train(point_config(base_cfg, point))
    final = log.final
    logger.info(
        f"Sweep point {point.variant} rate={point.rate:.2f} repeat={point.repeat}: val_acc={final.val_acc:.4f}"
    )
    return SweepResult(point, final.train_acc, final.val_acc, final.val_loss, log.total_seconds)


def run_sweep(
    base_cfg: TrainConfig,
    rates: Sequence[float],
    variants: Iterable[Union[Variant, str]] = SWEEP_VARIANTS,
    repeats: int = SWEEP_REPEATS,
    workers: int = 1,
    baseline: bool = False,
) -> List[SweepResult]:
    """
    Run every grid point, in worker processes when workers > 1.

    Repetition r of every variant and rate uses seed base_cfg.seed + r, so a given
    repetition sees the same dataset and initial weights across the grid.
    """
    points = build_points(rates, variants, repeats, base_cfg.seed, baseline)
    logger.info(f"Sweep over {len(points)} runs ({repeats} repetitions) with {workers} worker(s)")

    if workers <= 1:
        return [run_point(base_cfg, p) for p in points]

    run_point_lox = lox.process(workers)(run_point)
    for p in points:
        run_point_lox.scatter(base_cfg, p)
    logger.info(f"Running {workers} processes.")
    return list(run_point_lox.gather())


def _sort_key(row: SweepRow):
    return (row.variant != BASELINE, row.variant, row.rate)


def aggregate(results: Sequence[SweepResult]) -> List[SweepRow]:
    """Mean and standard deviation of the final val accuracy per (variant, rate), sorted."""
    groups = {}
    for r in results:
        groups.setdefault((r.point.variant, r.point.rate), []).append(r)

    rows = []
    for (variant, rate), group in groups.items():
        group = sorted(group, key=lambda r: r.point.repeat)
        val = np.array([r.final_val_acc for r in group], dtype=np.float64)
        tr = np.array([r.final_train_acc for r in group], dtype=np.float64)
        rows.append(
            SweepRow(
                variant=variant,
                rate=rate,
                repeats=len(group),
                mean_val_acc=float(val.mean()),
                std_val_acc=float(val.std(ddof=1)) if len(val) > 1 else 0.0,
                mean_val_error_pct=float(100.0 * (1.0 - val.mean())),
                mean_train_acc=float(tr.mean()),
                seeds=tuple(r.point.seed for r in group),
            )
        )
    return sorted(rows, key=_sort_key)


def write_sweep_csv(path: Union[str, Path], rows: Sequence[SweepRow]) -> Path:
    return write_csv(path, SweepRow.COLUMNS, (row.csv_row() for row in rows))


def sweep(
    base_cfg: TrainConfig,
    rates: Sequence[float],
    variants: Iterable[Union[Variant, str]] = SWEEP_VARIANTS,
    repeats: int = SWEEP_REPEATS,
    workers: int = 1,
    baseline: bool = False,
    out: Optional[Union[str, Path]] = None,
) -> List[SweepRow]:
    rows = aggregate(run_sweep(base_cfg, rates, variants, repeats, workers, baseline))
    if out is not None:
        write_sweep_csv(out, rows)
        logger.info(f"Sweep results saved to {out}")
    return rows
