"""Kernel registry: one kernel per (op type, device kind).

CPU kernels wrap a software function; FPGA kernels wrap a presynthesized
role. Lookup misses are values (None), signaling the caller to fall back.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .device import Role
from .errors import DuplicateRegistration, InvalidKernel
from .kernels import FixedWeights


class DeviceKind(str, Enum):
    CPU = "cpu"
    FPGA = "fpga"


# fn(inputs, weights) -> output array; weights is None for non-conv ops
SoftwareCallable = Callable[[Sequence[np.ndarray], "FixedWeights | None"], np.ndarray]


@dataclass(frozen=True)
class SoftwareFn:
    name: str
    fn: SoftwareCallable


@dataclass(frozen=True)
class KernelObject:
    op_type: str
    device_kind: DeviceKind
    body: SoftwareFn | Role

    def __post_init__(self):
        if self.device_kind is DeviceKind.FPGA and not isinstance(self.body, Role):
            raise InvalidKernel(f"FPGA kernel {self.op_type!r} must carry a bitstream role")
        if self.device_kind is DeviceKind.CPU and not isinstance(self.body, SoftwareFn):
            raise InvalidKernel(f"CPU kernel {self.op_type!r} must carry a software function")

    @property
    def role(self) -> Role:
        assert isinstance(self.body, Role)
        return self.body

    @property
    def software(self) -> SoftwareFn:
        assert isinstance(self.body, SoftwareFn)
        return self.body


class KernelRegistry:
    def __init__(self):
        self._entries: dict[tuple[str, DeviceKind], KernelObject] = {}

    def register(self, kernel: KernelObject) -> None:
        key = (kernel.op_type, kernel.device_kind)
        if key in self._entries:
            raise DuplicateRegistration(
                f"kernel already registered for ({kernel.op_type}, {kernel.device_kind.value})"
            )
        self._entries[key] = kernel

    def lookup(self, op_type: str, device_kind: DeviceKind) -> KernelObject | None:
        """Pure lookup; None means not found and the caller should fall back."""
        return self._entries.get((op_type, device_kind))

    def keys(self) -> list[tuple[str, DeviceKind]]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)
