import enum
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError
from .logger import logger


def load_key_value_config(path: Union[str, Path]) -> Dict[str, str]:
    """
    Load a flat key=value config file.

    Args:
        path: Config file path. Blank lines and lines starting with '#' are skipped.

    Returns:
        dict: Raw string values keyed by normalized key (dashes become underscores)
    """
    path = Path(path)
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower().replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key] = value.strip()
    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values


def parse_shape(text: Union[str, Sequence[int]]) -> Tuple[int, int, int, int]:
    """Parse 'n,c,h,w' (or 'nxcxhxw') into a 4-tuple."""
    if not isinstance(text, str):
        parts = list(text)
    else:
        parts = text.replace("x", ",").replace("×", ",").split(",")
    try:
        shape = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"Invalid shape {text!r}; expected n,c,h,w") from None
    if len(shape) != 4 or any(d < 1 for d in shape):
        raise ConfigError(f"Invalid shape {text!r}; expected four positive integers n,c,h,w")
    return shape


def parse_int_list(text: Union[str, Sequence[int]]) -> Tuple[int, ...]:
    if not isinstance(text, str):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"Invalid integer list {text!r}") from None


def parse_rate_grid(text: str) -> List[float]:
    """
    Parse a drop-rate grid.

    Accepts 'start:stop:step' (stop inclusive) or a comma-separated list.
    Every rate must lie in [0, 1). Rates are rounded to 10 decimals so
    0.05:0.5:0.05 yields exactly the ten values 0.05 ... 0.5.
    """
    text = str(text).strip()
    if not text:
        raise ConfigError("Empty rate grid")
    pieces = text.split(":") if ":" in text else [p for p in text.split(",") if p.strip()]
    try:
        values = [float(p) for p in pieces]
    except ValueError:
        raise ConfigError(f"Invalid rate grid {text!r}") from None

    if ":" in text:
        if len(values) != 3:
            raise ConfigError(f"Rate range {text!r} must be start:stop:step")
        start, stop, step = values
        if step <= 0 or stop < start:
            raise ConfigError(f"Rate range {text!r} needs step > 0 and stop >= start")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        rates = [round(start + i * step, 10) for i in range(count)]
    else:
        rates = [round(v, 10) for v in values]
    if not rates:
        raise ConfigError(f"Empty rate grid {text!r}")
    bad = [r for r in rates if not 0.0 <= r < 1.0]
    if bad:
        raise ConfigError(f"Rates must lie in [0, 1), got {bad}")
    return rates


class Stream(enum.IntEnum):
    """Purpose tags for `derive_seed`, one per seeded stream of a run."""

    TRAIN_SPLIT = 1
    VAL_SPLIT = 2
    ORDER = 3
    INIT = 4
    DROP = 5
    AUGMENT = 6


def derive_seed(base: int, *parts: int) -> int:
    """Deterministic 64-bit seed from a base seed and an index path."""
    seq = np.random.SeedSequence(int(base), spawn_key=tuple(int(p) for p in parts))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
