"""Micro-benchmarks of the MaxDropout / MaxDropoutV2 mask kernels."""

import enum
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import BENCH_ITERS, BENCH_LOCKFILE, BENCH_MEMORY_CAP_ELEMENTS, BENCH_WARMUP, DEFAULT_RATE
from .errors import BenchError, ConfigError, InvariantError
from .logger import logger
from .regularizers import (
    ComparisonCounter,
    DropConfig,
    Mode,
    Variant,
    analytic_comparisons,
    apply_drop,
    drop_mask,
)
from .tensor import Rng, Tensor, check_shape, uniform_tensor

MIN_ITERS = 30
MIN_WARMUP = 5


class BenchMode(str, enum.Enum):
    APPLY = "apply"
    MASK = "mask"


@dataclass
class BenchReport:
    CSV_COLUMNS = (
        "kernel",
        "variant",
        "mode",
        "shape",
        "iterations",
        "warmup",
        "median_ns",
        "p10_ns",
        "p90_ns",
        "comparison_count",
        "analytic_count",
    )

    kernel: str
    variant: str
    mode: str
    shape: Tuple[int, int, int, int]
    iterations: int
    warmup: int
    times_ns: List[int] = field(repr=False)
    median_ns: float
    p10_ns: float
    p90_ns: float
    comparison_count: int
    analytic_count: int

    def to_record(self) -> Dict:
        record = {name: getattr(self, name) for name in self.CSV_COLUMNS}
        record["shape"] = list(self.shape)
        record["times_ns"] = list(self.times_ns)
        return record

    def csv_row(self) -> List:
        row = []
        for name in self.CSV_COLUMNS:
            value = getattr(self, name)
            row.append("x".join(str(d) for d in value) if name == "shape" else value)
        return row


class _Sink:
    """Reads every kernel result so the work cannot be skipped."""

    def __init__(self):
        self.value = 0.0

    def consume(self, result):
        arr = result.values.data if hasattr(result, "values") else result.data
        self.value += float(arr.flat[0])


def make_kernel(cfg: DropConfig, mode: Union[BenchMode, str]) -> Callable:
    """The benched unit: mask generation plus application, or mask generation only."""
    mode = BenchMode(mode)
    rng = Rng(cfg.seed)

    if mode is BenchMode.APPLY:

        def kernel(t: Tensor, counter: Optional[ComparisonCounter] = None):
            out, _ = apply_drop(t, cfg, rng=rng, counter=counter)
            return out

        return kernel

    return lambda t, counter=None: drop_mask(t, cfg, rng=rng, counter=counter)


def bench_kernel(
    variant: Union[Variant, str],
    shape: Sequence[int],
    iters: int = BENCH_ITERS,
    warmup: int = BENCH_WARMUP,
    seed: int = 0,
    mode: Union[BenchMode, str] = BenchMode.APPLY,
    rate: float = DEFAULT_RATE,
    memory_cap: int = BENCH_MEMORY_CAP_ELEMENTS,
) -> BenchReport:
    variant = Variant.parse(variant)
    mode = BenchMode(mode)
    shape = check_shape(shape)
    if iters < MIN_ITERS:
        raise ConfigError(f"Need at least {MIN_ITERS} timed iterations, got {iters}")
    if warmup < MIN_WARMUP:
        raise ConfigError(f"Need at least {MIN_WARMUP} warmup iterations, got {warmup}")
    elements = int(np.prod(shape, dtype=np.int64))
    if elements > memory_cap:
        raise BenchError(f"Shape {shape} has {elements} elements, above the memory cap of {memory_cap}")

    cfg = DropConfig(variant, rate=rate, mode=Mode.TRAIN, seed=seed)
    kernel = make_kernel(cfg, mode)
    name = f"{variant.value}/{mode.value}"
    t = uniform_tensor(shape, Rng(seed))

    counter = ComparisonCounter()
    kernel(t, counter)
    analytic = analytic_comparisons(variant, shape)
    if counter.count != analytic:
        raise InvariantError(f"{name}: counted {counter.count} comparisons, analytic formula gives {analytic}")

    sink = _Sink()
    logger.debug(f"{name} {shape}: {warmup} warmup iterations")
    for _ in range(warmup):
        sink.consume(kernel(t))

    times = []
    for _ in range(iters):
        start = time.perf_counter_ns()
        result = kernel(t)
        elapsed = time.perf_counter_ns() - start
        sink.consume(result)
        times.append(elapsed)

    p10, median, p90 = np.percentile(np.asarray(times, dtype=np.float64), [10, 50, 90])
    report = BenchReport(
        kernel=name,
        variant=variant.value,
        mode=mode.value,
        shape=shape,
        iterations=iters,
        warmup=warmup,
        times_ns=times,
        median_ns=float(median),
        p10_ns=float(p10),
        p90_ns=float(p90),
        comparison_count=counter.count,
        analytic_count=analytic,
    )
    logger.info(f"{name} {shape}: median {median / 1e6:.3f} ms over {iters} runs, {counter.count} comparisons")
    logger.debug(f"sink={sink.value}")
    return report


def pin_to_single_cpu() -> Optional[int]:
    """Pin the process to one CPU where the platform allows it."""
    if not hasattr(os, "sched_setaffinity"):
        logger.warning("CPU pinning not supported on this platform; timings may be noisier")
        return None
    cpus = sorted(os.sched_getaffinity(0))
    cpu = cpus[0]
    os.sched_setaffinity(0, {cpu})
    logger.info(f"Pinned benchmark to CPU {cpu}")
    return cpu


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


@contextmanager
def bench_lock(path: Union[str, Path] = BENCH_LOCKFILE):
    """Refuse to run while another benchmark instance holds the lockfile."""
    path = Path(path)
    if path.exists():
        try:
            owner = int(path.read_text().strip() or 0)
        except ValueError:
            owner = 0
        if owner and owner != os.getpid() and _pid_alive(owner):
            raise BenchError(f"Another benchmark (pid {owner}) holds {path}")
        logger.warning(f"Removing stale benchmark lock {path}")
        path.unlink()
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise BenchError(f"Another benchmark acquired {path} first") from None
    with os.fdopen(fd, "w") as f:
        f.write(str(os.getpid()))
    try:
        yield path
    finally:
        path.unlink(missing_ok=True)
