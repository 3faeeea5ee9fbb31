"""Configuration constants for maxdropout_lab."""
from pathlib import Path

# Drop layer defaults
DEFAULT_RATE = 0.5
DEFAULT_SCOPE = "per_sample"
DEFAULT_SEED = 0

# Training protocol as published (ResNet-18 on CIFAR, not reproduced here)
PUBLISHED_LR0 = 0.1
PUBLISHED_MOMENTUM = 0.9
PUBLISHED_WEIGHT_DECAY = 5e-4
PUBLISHED_LR_DECAY_FACTOR = 0.2
PUBLISHED_DECAY_EPOCHS = (60, 120, 160)
PUBLISHED_EPOCHS = 200

# Seconds per epoch reported for ResNet-18 on CIFAR-10, MaxDropout vs MaxDropoutV2.
# Only quoted as the motivating figure for the kernel benchmark.
PUBLISHED_EPOCH_SECONDS_V1 = 32.8
PUBLISHED_EPOCH_SECONDS_V2 = 29.8

# Toy protocol: the published schedule scaled by 1/10 so a run takes minutes on a desktop CPU.
# lr0 is lowered because the toy net has no batch normalization.
TOY_LR0 = 0.01
TOY_EPOCHS = 20
TOY_DECAY_EPOCHS = (6, 12, 16)
TOY_BATCH_SIZE = 32
TOY_TRAIN_SIZE = 2000
TOY_VAL_SIZE = 500
TOY_IMAGE_SIZE = 28
TOY_CHANNELS = 3
TOY_CLASSES = 2

# RandomErasing defaults, overridable per plan
ERASING_AREA = (0.02, 0.33)
ERASING_ASPECT = (0.3, 3.3)
ERASING_ATTEMPTS = 10

# Batches prepared ahead of the training thread by the augmentation workers
LOADER_QUEUE_DEPTH = 4

# Benchmark configuration
BENCH_ITERS = 30
BENCH_WARMUP = 5
BENCH_SHAPE = (128, 64, 32, 32)
# 2**28 float32 elements is 1 GiB per tensor
BENCH_MEMORY_CAP_ELEMENTS = 2**28
BENCH_LOCKFILE = Path("maxdropout-bench.lock")
BENCH_GATE_RATIO = 0.95

# Sweep configuration
SWEEP_RATES = "0.05:0.5:0.05"
SWEEP_VARIANTS = ("max_dropout", "max_dropout_v2")
SWEEP_REPEATS = 3

# Worker processes/threads for sweep grid points and augmentation.
# When MAX_WORKERS > 1, per-run log lines interleave.
MAX_WORKERS = 1

# Output locations used when no explicit path is given
OUTPUT_DNAME = Path("runs")
