"""Reference kernels shared by the software path and the virtual device.

Every function here is pure and bit-deterministic: the same inputs produce
the same bits no matter which placement runs them, because the device model
executes these exact functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeMismatch
from .tensors import I16_MAX, I16_MIN

FC_F32 = "fc_f32"
FC_F32_BARRIER = "fc_f32_barrier"
CONV5X5_I16 = "conv5x5_i16"
CONV3X3X2_I16 = "conv3x3x2_i16"

COMPUTE_OP_TYPES = (FC_F32, FC_F32_BARRIER, CONV5X5_I16, CONV3X3X2_I16)
FC_OP_TYPES = frozenset({FC_F32, FC_F32_BARRIER})
BARRIER_OP_TYPES = frozenset({FC_F32_BARRIER})

# (filters, kernel height, kernel width) per convolution op type
CONV_WEIGHT_SHAPES = {CONV5X5_I16: (1, 5, 5), CONV3X3X2_I16: (2, 3, 3)}

_WRAP32 = 1 << 32
_SIGN32 = 1 << 31


@dataclass(frozen=True)
class FixedWeights:
    """Immutable int16 filter bank, as baked into a convolution role.

    scale_shift is the arithmetic right shift applied to the accumulator
    before saturating to int16.
    """

    values: np.ndarray
    scale_shift: int

    def __post_init__(self):
        if self.values.dtype != np.int16 or self.values.ndim != 3:
            raise ValueError("fixed weights must be an int16 (filters, kh, kw) array")
        if self.scale_shift < 0:
            raise ValueError("scale_shift must be >= 0")
        self.values.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        f, kh, kw = self.values.shape
        return int(f), int(kh), int(kw)

    @classmethod
    def generate(cls, op_type: str, seed: int, scale_shift: int) -> "FixedWeights":
        """Deterministic pseudo-random weights for a canonical conv op type."""
        if op_type not in CONV_WEIGHT_SHAPES:
            raise ValueError(f"{op_type!r} has no fixed-weight shape")
        rng = np.random.default_rng(seed)
        values = rng.integers(-128, 128, size=CONV_WEIGHT_SHAPES[op_type], dtype=np.int16)
        return cls(values, scale_shift)


def _check_fc_args(inp: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> tuple[int, int, int]:
    for name, arr in (("input", inp), ("weights", weights), ("bias", bias)):
        if arr.dtype != np.float32:
            raise ShapeMismatch(f"fc {name} must be float32, got {arr.dtype}")
    if inp.ndim != 2 or weights.ndim != 2 or bias.ndim != 1:
        raise ShapeMismatch(
            f"fc expects input [M,K], weights [K,N], bias [N]; "
            f"got {inp.shape}, {weights.shape}, {bias.shape}"
        )
    m, k = inp.shape
    k2, n = weights.shape
    if k != k2 or bias.shape[0] != n or min(m, k, n) < 1:
        raise ShapeMismatch(
            f"fc shapes do not conform: input {inp.shape}, weights {weights.shape}, "
            f"bias {bias.shape}"
        )
    return m, k, n


def fc_f32(inp: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """out[m,n] = bias[n] + sum_k inp[m,k] * weights[k,n], accumulated in ascending k.

    Each step rounds to float32, so the result is bit-identical to a scalar
    loop with the same order.
    """
    m, k, n = _check_fc_args(inp, weights, bias)
    out = np.broadcast_to(bias, (m, n)).copy()
    for ki in range(k):
        out += inp[:, ki, np.newaxis] * weights[ki, :]
    return out


def fc_f32_barrier(inp: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Value-identical to fc_f32; the barrier is visible only in execution traces."""
    return fc_f32(inp, weights, bias)


def conv2d_i16(inp: np.ndarray, weights: FixedWeights) -> np.ndarray:
    """Valid-padding stride-1 correlation on int16.

    Per output element: int16 x int16 products accumulate into a 32-bit
    two's-complement accumulator (wraparound), then the accumulator is
    shifted right arithmetically by scale_shift and saturated to int16.
    Output shape is (filters, H-kh+1, W-kw+1).
    """
    if inp.dtype != np.int16:
        raise ShapeMismatch(f"conv input must be int16, got {inp.dtype}")
    if inp.ndim != 2:
        raise ShapeMismatch(f"conv input must be 2-D [H,W], got shape {inp.shape}")
    f, kh, kw = weights.shape
    h, w = inp.shape
    if h < kh or w < kw:
        raise ShapeMismatch(f"input {h}x{w} smaller than kernel {kh}x{kw}")
    ho, wo = h - kh + 1, w - kw + 1

    # Exact accumulation in int64 (max |sum| = kh*kw*2^30 << 2^63), wrapped to
    # 32 bits once at the end; congruent to wrapping after every product.
    acc = np.zeros((f, ho, wo), dtype=np.int64)
    inp64 = inp.astype(np.int64)
    w64 = weights.values.astype(np.int64)
    for u in range(kh):
        for v in range(kw):
            acc += inp64[np.newaxis, u : u + ho, v : v + wo] * w64[:, u, v, np.newaxis, np.newaxis]
    wrapped = ((acc + _SIGN32) % _WRAP32) - _SIGN32
    shifted = wrapped >> weights.scale_shift
    return np.clip(shifted, I16_MIN, I16_MAX).astype(np.int16)


def op_count(
    op_type: str,
    input_shape: Sequence[int],
    weights_shape: Sequence[int] | None = None,
) -> int:
    """Arithmetic operation count: one MAC = 2 ops, one bias add = 1 op.

    FC needs weights_shape (K, N); conv kernel dims come from the op type
    unless weights_shape (F, kh, kw) is given explicitly.
    """
    if op_type in FC_OP_TYPES:
        if weights_shape is None or len(weights_shape) != 2:
            raise ShapeMismatch("fc op_count needs weights_shape (K, N)")
        if len(input_shape) != 2 or input_shape[1] != weights_shape[0]:
            raise ShapeMismatch(
                f"fc shapes do not conform: input {tuple(input_shape)}, "
                f"weights {tuple(weights_shape)}"
            )
        m, k = input_shape
        n = weights_shape[1]
        if min(m, k, n) < 1:
            raise ShapeMismatch("fc extents must be positive")
        return 2 * m * k * n + m * n
    if op_type in CONV_WEIGHT_SHAPES or weights_shape is not None:
        if weights_shape is None:
            weights_shape = CONV_WEIGHT_SHAPES[op_type]
        if len(weights_shape) != 3:
            raise ShapeMismatch("conv op_count needs weights_shape (F, kh, kw)")
        f, kh, kw = weights_shape
        if len(input_shape) != 2:
            raise ShapeMismatch(f"conv input must be 2-D, got {tuple(input_shape)}")
        h, w = input_shape
        if h < kh or w < kw:
            raise ShapeMismatch(f"input {h}x{w} smaller than kernel {kh}x{kw}")
        return 2 * f * (h - kh + 1) * (w - kw + 1) * kh * kw
    raise ShapeMismatch(f"no op count formula for op type {op_type!r}")


def run_op(
    op_type: str,
    inputs: Sequence[np.ndarray],
    weights: FixedWeights | None = None,
) -> np.ndarray:
    """Dispatch to the reference implementation for a canonical op type."""
    if op_type in FC_OP_TYPES:
        if len(inputs) != 3:
            raise ShapeMismatch(f"{op_type} takes (input, weights, bias), got {len(inputs)} args")
        return fc_f32(*inputs)
    if op_type in CONV_WEIGHT_SHAPES:
        if len(inputs) != 1:
            raise ShapeMismatch(f"{op_type} takes a single input, got {len(inputs)} args")
        if weights is None:
            raise ShapeMismatch(f"{op_type} needs fixed weights")
        if weights.shape != CONV_WEIGHT_SHAPES[op_type]:
            raise ShapeMismatch(
                f"{op_type} expects weights {CONV_WEIGHT_SHAPES[op_type]}, got {weights.shape}"
            )
        return conv2d_i16(inputs[0], weights)
    raise ShapeMismatch(f"no reference implementation for op type {op_type!r}")
