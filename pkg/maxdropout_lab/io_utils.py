"""Module for handling file and directory operations."""

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import PpmParseError, ShapeError
from .logger import logger
from .tensor import DTYPE, Tensor, decode_tensor, encode_tensor

PathLike = Union[str, Path]

_PPM_WHITESPACE = b" \t\n\r\v\f"


def setup_directories(*paths: PathLike) -> None:
    """Create the parent directories of every output path."""
    for path in paths:
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)


def dump_tensor(path: PathLike, t: Tensor) -> Path:
    path = Path(path)
    setup_directories(path)
    payload = encode_tensor(t)
    path.write_bytes(payload)
    logger.info(f"Wrote tensor {t.shape} to {path} ({len(payload)} bytes)")
    return path


def load_tensor(path: PathLike) -> Tensor:
    path = Path(path)
    return decode_tensor(path.read_bytes(), source=str(path))


def _skip_separator(buf: bytes, pos: int, source: Optional[str]) -> int:
    """Skip at least one whitespace byte plus any '#' comments."""
    start = pos
    while pos < len(buf):
        if buf[pos] == ord("#"):
            while pos < len(buf) and buf[pos] not in b"\r\n":
                pos += 1
        elif buf[pos] in _PPM_WHITESPACE:
            pos += 1
        else:
            break
    if pos == start:
        raise PpmParseError("expected whitespace", pos, source)
    return pos


def _read_header_int(buf: bytes, pos: int, name: str, source: Optional[str]):
    start = pos
    while pos < len(buf) and buf[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise PpmParseError(f"expected decimal {name}", start, source)
    value = int(buf[start:pos])
    if value < 1:
        raise PpmParseError(f"{name} must be positive, got {value}", start, source)
    return value, pos


def decode_ppm(buf: bytes, source: Optional[str] = None) -> Tensor:
    """Parse a binary P6 (RGB) or P5 (gray) image into a (1,C,H,W) tensor scaled to [0,1]."""
    magic = buf[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise PpmParseError(f"expected magic number P6 or P5, got {magic!r}", 0, source)

    pos = 2
    header = {}
    for name in ("width", "height", "maxval"):
        pos = _skip_separator(buf, pos, source)
        header[name], pos = _read_header_int(buf, pos, name, source)

    if header["maxval"] > 255:
        raise PpmParseError(f"only 8-bit images are supported, maxval={header['maxval']}", pos, source)
    if pos >= len(buf) or buf[pos] not in _PPM_WHITESPACE:
        raise PpmParseError("expected a single whitespace byte before pixel data", pos, source)
    pos += 1

    width, height, maxval = header["width"], header["height"], header["maxval"]
    needed = width * height * channels
    available = len(buf) - pos
    if available < needed:
        raise PpmParseError(f"truncated pixel data: expected {needed} bytes, found {available}", pos, source)
    if available > needed:
        logger.debug(f"Ignoring {available - needed} trailing bytes in {source or 'PPM data'}")

    pixels = np.frombuffer(buf, dtype=np.uint8, count=needed, offset=pos)
    over = np.flatnonzero(pixels > maxval)
    if over.size:
        raise PpmParseError(f"sample value exceeds maxval {maxval}", pos + int(over[0]), source)

    planes = pixels.reshape(height, width, channels).transpose(2, 0, 1)
    return Tensor._wrap(planes[np.newaxis].astype(DTYPE) / DTYPE(maxval))


def encode_ppm(t: Tensor) -> bytes:
    n, c, h, w = t.shape
    if n != 1 or c not in (1, 3):
        raise ShapeError(f"PPM images need shape (1, 1|3, H, W), got {t.shape}")
    pixels = np.clip(np.rint(t.data[0] * DTYPE(255)), 0, 255).astype(np.uint8)
    magic = "P6" if c == 3 else "P5"
    header = f"{magic}\n{w} {h}\n255\n".encode("ascii")
    return header + pixels.transpose(1, 2, 0).tobytes()


def read_ppm(path: PathLike) -> Tensor:
    path = Path(path)
    img = decode_ppm(path.read_bytes(), source=str(path))
    logger.debug(f"Read image {path} with shape {img.shape}")
    return img


def write_ppm(path: PathLike, t: Tensor) -> Path:
    path = Path(path)
    setup_directories(path)
    payload = encode_ppm(t)
    path.write_bytes(payload)
    logger.info(f"Wrote image {path} ({t.shape[3]}x{t.shape[2]}, {len(payload)} bytes)")
    return path


def write_csv(path: PathLike, headers: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    setup_directories(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(headers)
        count = 0
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_csv(path: PathLike) -> list:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_jsonl(path: PathLike, records: Iterable[Mapping], append: bool = False) -> Path:
    path = Path(path)
    setup_directories(path)
    mode = "a" if append else "w"
    with open(path, mode) as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    logger.info(f"Wrote JSON lines to {path}")
    return path


def read_jsonl(path: PathLike) -> list:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
