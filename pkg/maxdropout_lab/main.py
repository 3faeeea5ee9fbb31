import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, Optional

from .augment import parse_plan
from .bench import BenchMode, bench_kernel, bench_lock, pin_to_single_cpu
from .compare import compare
from .config import (
    BENCH_ITERS,
    BENCH_LOCKFILE,
    BENCH_MEMORY_CAP_ELEMENTS,
    BENCH_SHAPE,
    BENCH_WARMUP,
    DEFAULT_RATE,
    DEFAULT_SCOPE,
    DEFAULT_SEED,
    MAX_WORKERS,
    OUTPUT_DNAME,
    PUBLISHED_MOMENTUM,
    PUBLISHED_WEIGHT_DECAY,
    PUBLISHED_LR_DECAY_FACTOR,
    SWEEP_RATES,
    SWEEP_REPEATS,
    SWEEP_VARIANTS,
    TOY_BATCH_SIZE,
    TOY_DECAY_EPOCHS,
    TOY_EPOCHS,
    TOY_LR0,
    TOY_TRAIN_SIZE,
    TOY_VAL_SIZE,
)
from .dump import dump
from .errors import EXIT_DATA, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, BenchError, ConfigError, LabError
from .io_utils import dump_tensor, read_ppm, write_csv, write_jsonl, write_ppm
from .logger import logger
from .regularizers import DropConfig, Mode, Variant, apply_drop
from .sweep import sweep
from .table import bench_table, sweep_table
from .tensor import mul
from .train import TrainConfig, train
from .utils import load_key_value_config, parse_int_list, parse_rate_grid, parse_shape

NO_DROP = "none"


def _to_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"Expected a boolean, got {text!r}")


def _variant_list(text) -> tuple:
    if not isinstance(text, str):
        return tuple(Variant.parse(v) for v in text)
    return tuple(Variant.parse(v) for v in text.split(",") if v.strip())


class Settings:
    """Resolves a setting: explicit flag, then the --config file, then the built-in default."""

    def __init__(self, args: argparse.Namespace, file_values: Optional[Dict[str, str]] = None):
        self.args = args
        self.file_values = file_values or {}

    def get(self, name: str, default, convert: Callable = str):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.file_values:
            raw = self.file_values[name]
            try:
                return convert(raw)
            except ValueError as e:
                raise ConfigError(f"Config value {name}={raw!r} is invalid: {e}") from None
        return default


def build_drop_config(settings: Settings, default_variant: str) -> Optional[DropConfig]:
    variant = settings.get("variant", default_variant)
    if str(variant).strip().lower() == NO_DROP:
        return None
    return DropConfig(
        variant=variant,
        rate=settings.get("rate", DEFAULT_RATE, float),
        mode=Mode.TRAIN,
        scope=settings.get("scope", DEFAULT_SCOPE),
        seed=settings.get("seed", DEFAULT_SEED, int),
        rescale=settings.get("rescale", False, _to_bool),
    )


def build_train_config(settings: Settings, drop: Optional[DropConfig]) -> TrainConfig:
    seed = settings.get("seed", DEFAULT_SEED, int)
    return TrainConfig(
        lr0=settings.get("lr0", TOY_LR0, float),
        momentum=settings.get("momentum", PUBLISHED_MOMENTUM, float),
        weight_decay=settings.get("weight_decay", PUBLISHED_WEIGHT_DECAY, float),
        lr_decay_factor=settings.get("lr_decay_factor", PUBLISHED_LR_DECAY_FACTOR, float),
        decay_epochs=settings.get("decay_epochs", TOY_DECAY_EPOCHS, parse_int_list),
        epochs=settings.get("epochs", TOY_EPOCHS, int),
        batch_size=settings.get("batch_size", TOY_BATCH_SIZE, int),
        drop=drop,
        augment=parse_plan(settings.get("augment", ""), seed),
        seed=seed,
        train_size=settings.get("train_size", TOY_TRAIN_SIZE, int),
        val_size=settings.get("val_size", TOY_VAL_SIZE, int),
        workers=settings.get("workers", MAX_WORKERS, int),
    )


def cmd_visualize(settings: Settings) -> int:
    args = settings.args
    img = read_ppm(args.input)
    cfg = build_drop_config(settings, Variant.MAX_DROPOUT_V2.value)
    if cfg is None:
        raise ConfigError("visualize needs a drop variant")

    _, mask = apply_drop(img, cfg)
    # The mask alone is shown; survivor rescaling would only brighten kept pixels.
    masked = mul(img, mask.expand(img.shape[1]))
    write_ppm(args.output, masked)

    dropped = mask.values.data == 0
    black = (masked.data[0] == 0).all(axis=0).mean()
    logger.info(
        f"{cfg.variant.value} at rate {cfg.rate:g}: {dropped.mean():.3f} of mask entries dropped, "
        f"{black:.3f} of pixels fully black"
    )
    if args.dump_tensor:
        dump_tensor(args.dump_tensor, masked)
    if args.dump_mask:
        dump_tensor(args.dump_mask, mask.values)
    return EXIT_OK


def cmd_train(settings: Settings) -> int:
    cfg = build_train_config(settings, build_drop_config(settings, NO_DROP))
    if logger.isEnabledFor(logging.DEBUG):
        dump(cfg)

    log = train(cfg)
    metrics = settings.get("metrics", OUTPUT_DNAME / "metrics.csv", Path)
    log.write_csv(metrics)

    final = log.final
    print(
        f"final train_acc={final.train_acc:.4f} val_acc={final.val_acc:.4f} "
        f"mean epoch {log.mean_epoch_seconds:.2f}s, total {log.total_seconds:.2f}s"
    )
    return EXIT_OK


def cmd_bench(settings: Settings) -> int:
    shape = settings.get("shape", BENCH_SHAPE, parse_shape)
    variants = settings.get("variants", (Variant.MAX_DROPOUT, Variant.MAX_DROPOUT_V2), _variant_list)
    iters = settings.get("iters", BENCH_ITERS, int)
    warmup = settings.get("warmup", BENCH_WARMUP, int)
    mode = settings.get("mode", BenchMode.APPLY, BenchMode)
    rate = settings.get("rate", DEFAULT_RATE, float)
    seed = settings.get("seed", DEFAULT_SEED, int)
    gate = settings.get("gate", 1.0, float)
    strict = settings.get("strict", False, _to_bool)
    memory_cap = settings.get("memory_cap", BENCH_MEMORY_CAP_ELEMENTS, int)
    lockfile = settings.get("lockfile", BENCH_LOCKFILE, Path)
    jsonl = settings.get("jsonl", None, Path)
    csv_path = settings.get("csv", None, Path)
    if not variants:
        raise ConfigError("bench needs at least one variant")

    with bench_lock(lockfile):
        if not settings.get("no_pin", False, _to_bool):
            pin_to_single_cpu()
        reports = [
            bench_kernel(v, shape, iters, warmup, seed=seed, mode=mode, rate=rate, memory_cap=memory_cap)
            for v in variants
        ]

    print(bench_table(reports))
    records = [dict(r.to_record(), record="bench") for r in reports]

    by_variant = {r.variant: r for r in reports}
    summary = None
    if Variant.MAX_DROPOUT.value in by_variant and Variant.MAX_DROPOUT_V2.value in by_variant:
        summary = compare(by_variant[Variant.MAX_DROPOUT.value], by_variant[Variant.MAX_DROPOUT_V2.value], gate)
        print(summary.describe())
        records.append(dict(summary.to_record(), record="compare"))

    if jsonl:
        write_jsonl(jsonl, records, append=True)
    if csv_path:
        write_csv(csv_path, reports[0].CSV_COLUMNS, (r.csv_row() for r in reports))

    if strict and summary is not None and not summary.passed:
        raise BenchError(f"Speed gate failed: time ratio {summary.time_ratio:.3f} above {gate:g}")
    return EXIT_OK


def cmd_sweep(settings: Settings) -> int:
    rates = settings.get("rates", None, parse_rate_grid)
    if rates is None:
        rates = parse_rate_grid(SWEEP_RATES)
    variants = settings.get("variants", SWEEP_VARIANTS, _variant_list)
    repeats = settings.get("repeats", SWEEP_REPEATS, int)
    workers = settings.get("workers", MAX_WORKERS, int)
    baseline = settings.get("baseline", False, _to_bool)
    out = settings.get("out", OUTPUT_DNAME / "sweep.csv", Path)

    # Each grid point replaces variant, rate and seed; scope and rescale carry over.
    template = DropConfig(
        Variant.MAX_DROPOUT,
        rate=0.0,
        scope=settings.get("scope", DEFAULT_SCOPE),
        rescale=settings.get("rescale", False, _to_bool),
    )
    # Grid workers run whole trainings; augmentation inside each stays single-threaded.
    base = build_train_config(settings, template).replace(workers=1)
    rows = sweep(base, rates, variants, repeats, workers=workers, baseline=baseline, out=out)
    print(sweep_table(rows))
    return EXIT_OK


def _add_drop_args(parser, default_variant: str):
    parser.add_argument("--variant", help=f"dropout, max_dropout (v1), max_dropout_v2 (v2) (default {default_variant})")
    parser.add_argument("--rate", type=float, help=f"Drop rate in [0, 1) (default {DEFAULT_RATE})")
    parser.add_argument("--scope", choices=["per_sample", "whole_tensor"], help="Min-max normalization scope")
    parser.add_argument(
        "--rescale", action="store_true", default=None, help="Scale MaxDropout survivors by 1/(1 - rate)"
    )


def _add_train_args(parser):
    parser.add_argument("--epochs", type=int, help=f"Training epochs (default {TOY_EPOCHS})")
    parser.add_argument("--batch-size", type=int, help=f"Mini-batch size (default {TOY_BATCH_SIZE})")
    parser.add_argument("--lr0", type=float, help=f"Initial learning rate (default {TOY_LR0})")
    parser.add_argument("--momentum", type=float, help="Nesterov momentum")
    parser.add_argument("--weight-decay", type=float, help="L2 weight decay")
    parser.add_argument("--lr-decay-factor", type=float, help="Learning-rate multiplier at each decay epoch")
    parser.add_argument("--decay-epochs", type=parse_int_list, help="Comma-separated decay epochs")
    parser.add_argument("--augment", help="Augmentation plan, e.g. crop=28x28,hflip=0.5,cutout=8")
    parser.add_argument("--train-size", type=int, help="Synthetic training samples")
    parser.add_argument("--val-size", type=int, help="Synthetic validation samples")


def parse_args(argv=None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Set the logging level",
    )
    common.add_argument(
        "--minimal-logger",
        action="store_true",
        help="Use minimal logging format without timestamps",
    )
    common.add_argument("--config", type=Path, help="key=value settings file; explicit flags take precedence")
    common.add_argument("--seed", type=int, help=f"Base seed (default {DEFAULT_SEED})")

    parser = argparse.ArgumentParser(
        prog="maxdropout-lab",
        description="MaxDropout / MaxDropoutV2 regularizers: mask visualization, toy training, benchmarks, sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("visualize", parents=[common], help="Apply a drop variant to a PPM image")
    p.add_argument("input", type=Path, help="Input PPM (P6 or P5)")
    p.add_argument("output", type=Path, help="Output PPM")
    _add_drop_args(p, Variant.MAX_DROPOUT_V2.value)
    p.add_argument("--dump-tensor", type=Path, help="Also write the masked image as a binary tensor dump")
    p.add_argument("--dump-mask", type=Path, help="Also write the mask as a binary tensor dump")
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("train", parents=[common], help="Train the toy CNN on the synthetic dataset")
    _add_drop_args(p, NO_DROP)
    _add_train_args(p)
    p.add_argument("--workers", type=int, help="Augmentation worker threads")
    p.add_argument("--metrics", type=Path, help=f"Metrics CSV (default {OUTPUT_DNAME / 'metrics.csv'})")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", parents=[common], help="Time the mask kernels")
    p.add_argument("--shape", type=parse_shape, help="Tensor shape n,c,h,w (default 128,64,32,32)")
    p.add_argument("--variants", type=_variant_list, help="Comma-separated variants (default v1,v2)")
    p.add_argument("--iters", type=int, help=f"Timed iterations, at least 30 (default {BENCH_ITERS})")
    p.add_argument("--warmup", type=int, help=f"Warmup iterations, at least 5 (default {BENCH_WARMUP})")
    p.add_argument("--mode", choices=[m.value for m in BenchMode], help="apply (mask + apply) or mask only")
    p.add_argument("--rate", type=float, help=f"Drop rate (default {DEFAULT_RATE})")
    p.add_argument("--gate", type=float, help="PASS needs time ratio v2/v1 below 1 and at most this value")
    p.add_argument("--strict", action="store_true", default=None, help="Exit with an error when the gate fails")
    p.add_argument("--memory-cap", type=int, help="Largest tensor element count accepted")
    p.add_argument("--lockfile", type=Path, help=f"Single-instance lockfile (default {BENCH_LOCKFILE})")
    p.add_argument("--no-pin", action="store_true", default=None, help="Do not pin to a single CPU")
    p.add_argument("--jsonl", type=Path, help="Append one JSON object per kernel run")
    p.add_argument("--csv", type=Path, help="Write the reports as CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", parents=[common], help="Final val accuracy over a drop-rate grid")
    p.add_argument("--rates", type=parse_rate_grid, help=f"start:stop:step or comma list (default {SWEEP_RATES})")
    p.add_argument("--variants", type=_variant_list, help="Comma-separated variants (default v1,v2)")
    p.add_argument("--repeats", type=int, help=f"Repetitions per grid point (default {SWEEP_REPEATS})")
    p.add_argument("--workers", type=int, help="Worker processes for grid points")
    p.add_argument("--baseline", action="store_true", default=None, help="Add a no-drop baseline row")
    p.add_argument("--out", type=Path, help=f"Sweep CSV (default {OUTPUT_DNAME / 'sweep.csv'})")
    p.add_argument("--scope", choices=["per_sample", "whole_tensor"], help="Min-max normalization scope")
    p.add_argument(
        "--rescale", action="store_true", default=None, help="Scale MaxDropout survivors by 1/(1 - rate)"
    )
    _add_train_args(p)
    p.set_defaults(func=cmd_sweep)

    return parser.parse_args(argv)


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logger.setLevel(args.log_level)
    logger.set_minimal(args.minimal_logger)

    try:
        file_values = load_key_value_config(args.config) if args.config else {}
        return args.func(Settings(args, file_values))
    except KeyboardInterrupt:
        logger.warning("\nProgram terminated by user")
        return 1
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_DATA
    except Exception as e:
        logger.error(f"An error occurred: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
