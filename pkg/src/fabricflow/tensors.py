"""Dense tensors with explicit dtypes and a plain-text literal format.

The literal format is one line of header plus whitespace-separated values:

    dtype extent extent ... : v v v ...

e.g. ``i16 2 3: 1 2 3 4 5 6`` is a 2x3 int16 tensor in row-major order.
Float values are written with repr() so they round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError

I16_MIN = -32768
I16_MAX = 32767

DTYPE_TO_NUMPY = {"f32": np.float32, "i16": np.int16}
NUMPY_TO_DTYPE = {np.dtype(np.float32): "f32", np.dtype(np.int16): "i16"}


@dataclass(frozen=True, eq=False)
class Tensor:
    dtype: str
    shape: tuple[int, ...]
    array: np.ndarray

    def __post_init__(self):
        if self.dtype not in DTYPE_TO_NUMPY:
            raise ValueError(f"unsupported dtype {self.dtype!r}")
        if not self.shape or any(not isinstance(e, int) or e < 1 for e in self.shape):
            raise ValueError(f"shape extents must be positive, got {self.shape}")
        if self.array.dtype != DTYPE_TO_NUMPY[self.dtype]:
            raise ValueError(f"array dtype {self.array.dtype} does not match {self.dtype}")
        if tuple(self.array.shape) != self.shape:
            raise ValueError(f"array shape {self.array.shape} does not match {self.shape}")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Tensor":
        dtype = NUMPY_TO_DTYPE.get(array.dtype)
        if dtype is None:
            raise ValueError(f"unsupported array dtype {array.dtype}")
        return cls(dtype, tuple(int(e) for e in array.shape), np.ascontiguousarray(array))

    @classmethod
    def from_flat(cls, dtype: str, shape: Sequence[int], values: Iterable) -> "Tensor":
        shape = tuple(int(e) for e in shape)
        values = list(values)
        expected = int(np.prod(shape)) if shape else 0
        if len(values) != expected:
            raise ValueError(f"expected {expected} values for shape {shape}, got {len(values)}")
        if dtype == "i16":
            for v in values:
                if not float(v).is_integer():
                    raise ValueError(f"i16 tensor value {v!r} is not an integer")
                if not I16_MIN <= int(v) <= I16_MAX:
                    raise ValueError(f"i16 tensor value {v} out of range")
            array = np.array([int(v) for v in values], dtype=np.int16).reshape(shape)
        elif dtype == "f32":
            array = np.array([float(v) for v in values], dtype=np.float32).reshape(shape)
        else:
            raise ValueError(f"unsupported dtype {dtype!r}")
        return cls(dtype, shape, array)

    @property
    def size(self) -> int:
        return int(self.array.size)

    def flat(self) -> list:
        if self.dtype == "i16":
            return [int(v) for v in self.array.reshape(-1)]
        return [float(v) for v in self.array.reshape(-1)]

    def equals(self, other: "Tensor") -> bool:
        """Exact (bitwise) equality: same dtype, shape, and every element."""
        return (
            self.dtype == other.dtype
            and self.shape == other.shape
            and bool(np.array_equal(self.array, other.array))
        )


def format_literal(tensor: Tensor) -> str:
    header = " ".join([tensor.dtype, *[str(e) for e in tensor.shape]])
    if tensor.dtype == "i16":
        body = " ".join(str(v) for v in tensor.flat())
    else:
        body = " ".join(repr(v) for v in tensor.flat())
    return f"{header}: {body}\n"


def parse_literal(text: str) -> Tensor:
    head, sep, body = text.partition(":")
    if not sep:
        raise ParseError("tensor literal has no ':' separator")
    head_tokens = head.split()
    if len(head_tokens) < 2:
        raise ParseError("tensor literal header needs a dtype and at least one extent")
    dtype = head_tokens[0]
    if dtype not in DTYPE_TO_NUMPY:
        raise ParseError(f"unsupported dtype {dtype!r} in tensor literal")
    try:
        shape = [int(tok) for tok in head_tokens[1:]]
    except ValueError as exc:
        raise ParseError(f"bad shape extent in tensor literal: {exc}") from None
    values: list = []
    for tok in body.split():
        try:
            values.append(int(tok) if dtype == "i16" else float(tok))
        except ValueError:
            raise ParseError(f"bad {dtype} value {tok!r} in tensor literal") from None
    try:
        return Tensor.from_flat(dtype, shape, values)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
