"""Dense 4-D NCHW float32 tensors and the deterministic RNG used by every stochastic op.

Tensors are immutable: the backing array is flagged read-only and every operation returns a new
tensor, so tensors can be shared between workers without locking. An Rng is owned by one worker.
"""

import enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, ShapeError, TensorFormatError

Shape = Tuple[int, int, int, int]

DTYPE = np.float32
HEADER_DTYPE = np.dtype("<u4")
PAYLOAD_DTYPE = np.dtype("<f4")
HEADER_BYTES = 4 * HEADER_DTYPE.itemsize


class Scope(str, enum.Enum):
    """Extent over which min-max normalization (and therefore masking) is computed."""

    PER_SAMPLE = "per_sample"
    WHOLE_TENSOR = "whole_tensor"


def check_shape(shape: Sequence[int]) -> Shape:
    shape = tuple(int(d) for d in shape)
    if len(shape) != 4:
        raise ShapeError(f"Expected a 4-D NCHW shape, got {shape}")
    if any(d < 1 for d in shape):
        raise ShapeError(f"All dimensions must be >= 1, got {shape}")
    return shape


class Tensor:
    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=DTYPE, order="C")
        check_shape(arr.shape)
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        """Adopt a freshly computed array without copying it."""
        if arr.dtype != DTYPE or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr, dtype=DTYPE)
        check_shape(arr.shape)
        arr.flags.writeable = False
        obj = cls.__new__(cls)
        obj._data = arr
        return obj

    @classmethod
    def from_values(cls, shape: Sequence[int], values: Iterable[float]) -> "Tensor":
        shape = check_shape(shape)
        flat = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=DTYPE).ravel()
        expected = int(np.prod(shape))
        if flat.size != expected:
            raise ShapeError(f"Shape {shape} needs {expected} values, got {flat.size}")
        return cls._wrap(flat.reshape(shape).copy())

    @classmethod
    def full(cls, shape: Sequence[int], value: float) -> "Tensor":
        return cls._wrap(np.full(check_shape(shape), value, dtype=DTYPE))

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> "Tensor":
        return cls.full(shape, 0.0)

    @classmethod
    def ones(cls, shape: Sequence[int]) -> "Tensor":
        return cls.full(shape, 1.0)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Shape:
        return self._data.shape

    @property
    def size(self) -> int:
        return self._data.size

    def flat(self) -> np.ndarray:
        return self._data.ravel()

    def offset(self, i: int, j: int, k: int, l: int) -> int:
        n, c, h, w = self.shape
        for idx, dim in zip((i, j, k, l), (n, c, h, w)):
            if not 0 <= idx < dim:
                raise IndexError(f"Index {(i, j, k, l)} out of range for shape {self.shape}")
        return ((i * c + j) * h + k) * w + l

    def index(self, offset: int) -> Shape:
        if not 0 <= offset < self.size:
            raise IndexError(f"Offset {offset} out of range for shape {self.shape}")
        _, c, h, w = self.shape
        offset, l = divmod(offset, w)
        offset, k = divmod(offset, h)
        i, j = divmod(offset, c)
        return i, j, k, l

    def at(self, i: int, j: int, k: int, l: int) -> float:
        return float(self.flat()[self.offset(i, j, k, l)])

    def identical(self, other: "Tensor") -> bool:
        """Bit-exact equality, shape included."""
        if self.shape != other.shape:
            return False
        return bool(np.array_equal(self._data.view(np.uint32), other._data.view(np.uint32)))

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


class Rng:
    """Seeded counter-based generator (Philox), reproducible across runs and platforms."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(seed))

    @property
    def counter(self) -> int:
        state = self._gen.bit_generator.state["state"]
        return int(sum(int(word) << (64 * i) for i, word in enumerate(state["counter"])))

    def random(self) -> float:
        return float(self._gen.random())

    def random_array(self, shape: Sequence[int]) -> np.ndarray:
        return self._gen.random(tuple(shape), dtype=DTYPE)

    def uniform(self, low: float, high: float) -> float:
        return float(self._gen.uniform(low, high))

    def uniform_array(self, low: float, high: float, shape: Sequence[int]) -> np.ndarray:
        return self._gen.uniform(low, high, tuple(shape)).astype(DTYPE)

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        return int(self._gen.integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def normal(self, size: Sequence[int]) -> np.ndarray:
        return self._gen.standard_normal(tuple(size), dtype=DTYPE)


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def sum_axis1(t: Tensor) -> Tensor:
    """Sum over the channel (depth) axis, keeping it as size 1."""
    return Tensor._wrap(np.add.reduce(t.data, axis=1, keepdims=True, dtype=DTYPE))


def minmax_array(arr: np.ndarray, scope: Union[Scope, str] = Scope.PER_SAMPLE) -> np.ndarray:
    """(x - min) / (max - min) per scope; a constant scope maps to all zeros.

    The arithmetic runs in float64: the span of two finite float32 values can exceed the float32 range.
    """
    axes = (1, 2, 3) if Scope(scope) is Scope.PER_SAMPLE else None
    wide = arr.astype(np.float64)
    lo = wide.min(axis=axes, keepdims=True)
    span = wide.max(axis=axes, keepdims=True) - lo
    degenerate = ~(span > 0)
    out = (wide - lo) / np.where(degenerate, 1.0, span)
    if degenerate.any():
        out = np.where(degenerate, 0.0, out)
    return out.astype(DTYPE)


def minmax_normalize(t: Tensor, scope: Union[Scope, str] = Scope.PER_SAMPLE) -> Tensor:
    return Tensor._wrap(minmax_array(t.data, scope))


def broadcast_mul(t: Tensor, m: Tensor) -> Tensor:
    """Multiply every channel of `t` by the single-channel map `m` (n,1,h,w)."""
    n, _, h, w = t.shape
    if m.shape != (n, 1, h, w):
        raise ShapeError(f"broadcast_mul: mask shape {m.shape} does not match {(n, 1, h, w)}")
    return Tensor._wrap(t.data * m.data)


def uniform_tensor(shape: Sequence[int], rng: Rng) -> Tensor:
    return Tensor._wrap(rng.random_array(check_shape(shape)))


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    return Tensor._wrap(a.data + b.data)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    return Tensor._wrap(a.data * b.data)


def relu(t: Tensor) -> Tensor:
    return Tensor._wrap(np.maximum(t.data, DTYPE(0)))


def scale(t: Tensor, factor: float) -> Tensor:
    return Tensor._wrap(t.data * DTYPE(factor))


def add_scalar(t: Tensor, value: float) -> Tensor:
    return Tensor._wrap(t.data + DTYPE(value))


def encode_tensor(t: Tensor) -> bytes:
    """4 x u32 little-endian shape header followed by the f32 little-endian payload."""
    header = np.asarray(t.shape, dtype=HEADER_DTYPE).tobytes()
    return header + t.data.astype(PAYLOAD_DTYPE, copy=False).tobytes()


def decode_tensor(buf: bytes, source: Optional[str] = None) -> Tensor:
    where = f"{source}: " if source else ""
    if len(buf) < HEADER_BYTES:
        raise TensorFormatError(f"{where}truncated header ({len(buf)} bytes)")
    shape = tuple(int(d) for d in np.frombuffer(buf[:HEADER_BYTES], dtype=HEADER_DTYPE))
    if any(d < 1 for d in shape):
        raise TensorFormatError(f"{where}invalid shape {shape} in header")
    expected = HEADER_BYTES + int(np.prod(shape, dtype=np.int64)) * PAYLOAD_DTYPE.itemsize
    if len(buf) != expected:
        raise TensorFormatError(f"{where}expected {expected} bytes for shape {shape}, got {len(buf)}")
    payload = np.frombuffer(buf[HEADER_BYTES:], dtype=PAYLOAD_DTYPE).astype(DTYPE)
    return Tensor._wrap(payload.reshape(shape))
