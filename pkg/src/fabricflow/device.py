"""Virtual partially-reconfigurable FPGA.

The device is a static shell plus N homogeneous regions. Loading a role into
a region is a reconfiguration; a role that is already resident is a hit and
costs nothing. When all regions are occupied the least-recently-used one is
evicted. The device itself is cost-agnostic: it counts hits and misses, and
the runtime converts misses into timeline charges.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapacityExceeded, RoleNotLoaded
from .kernels import FixedWeights, run_op
from .resources import RESOURCE_COMPONENTS, ResourceVector


@dataclass(frozen=True)
class Role:
    """A presynthesized accelerator kernel occupying one region when loaded."""

    role_id: str
    op_type: str
    footprint: ResourceVector
    cycles_per_element: Fraction
    description: str = ""

    def __post_init__(self):
        if self.cycles_per_element <= 0:
            raise ValueError("cycles_per_element must be > 0")


@dataclass
class Region:
    index: int
    loaded: Role | None = None
    last_use: int = 0


@dataclass(frozen=True)
class LoadResult:
    region_index: int
    reconfigured: bool


@dataclass(frozen=True)
class ExecResult:
    output: np.ndarray
    element_count: int
    compute_cycles: int


@dataclass
class VirtualFpga:
    capacity: ResourceVector
    shell: ResourceVector
    region_count: int = 2
    name: str = "fpga"
    regions: list[Region] = field(init=False)
    reconfig_count: int = field(init=False, default=0)
    hit_count: int = field(init=False, default=0)
    _stamp: int = field(init=False, default=0)
    # Serializes load+execute pairs when several runtime sessions share a device.
    lock: threading.RLock = field(init=False, repr=False)

    def __post_init__(self):
        if self.region_count < 1:
            raise ValueError("region_count must be >= 1")
        exceeded = self.shell.exceeded_components(self.capacity)
        if exceeded:
            raise ValueError(f"shell exceeds capacity in {exceeded}")
        self.regions = [Region(i) for i in range(self.region_count)]
        self.lock = threading.RLock()

    # -- state inspection --

    def loaded_roles(self) -> dict[str, int]:
        """role_id -> region index for every occupied region."""
        return {r.loaded.role_id: r.index for r in self.regions if r.loaded is not None}

    def used(self) -> ResourceVector:
        return self.shell + ResourceVector.total(
            r.loaded.footprint for r in self.regions if r.loaded is not None
        )

    def check_capacity_invariant(self) -> None:
        exceeded = self.used().exceeded_components(self.capacity)
        if exceeded:
            raise CapacityExceeded(
                exceeded[0],
                getattr(self.used(), exceeded[0]),
                getattr(self.capacity, exceeded[0]),
            )

    # -- region management --

    def resource_check(self, role: Role) -> None:
        """Raise unless the role fits as if loaded into an additional empty region."""
        self._check_fit(role, skip_index=None)

    def _check_fit(self, role: Role, skip_index: int | None) -> None:
        resident = ResourceVector.total(
            r.loaded.footprint
            for r in self.regions
            if r.loaded is not None and r.index != skip_index
        )
        needed = self.shell + resident + role.footprint
        exceeded = needed.exceeded_components(self.capacity)
        if exceeded:
            name = exceeded[0]
            raise CapacityExceeded(name, getattr(needed, name), getattr(self.capacity, name))

    def _touch(self, region: Region) -> None:
        self._stamp += 1
        region.last_use = self._stamp

    def ensure_loaded(self, role: Role) -> LoadResult:
        """Make the role resident; LRU-evict when no region is free.

        Hit: refresh recency, zero cost. Miss: fill the lowest-index empty
        region, else evict the region with the smallest last_use stamp.
        """
        with self.lock:
            for region in self.regions:
                if region.loaded is not None and region.loaded.role_id == role.role_id:
                    self.hit_count += 1
                    self._touch(region)
                    return LoadResult(region.index, reconfigured=False)

            target = next((r for r in self.regions if r.loaded is None), None)
            if target is not None:
                self._check_fit(role, skip_index=None)
            else:
                target = min(self.regions, key=lambda r: r.last_use)
                self._check_fit(role, skip_index=target.index)
            target.loaded = role
            self.reconfig_count += 1
            self._touch(target)
            return LoadResult(target.index, reconfigured=True)

    def execute_role(
        self,
        region_index: int,
        role: Role,
        inputs: Sequence[np.ndarray],
        weights: FixedWeights | None = None,
        element_count: int | None = None,
    ) -> ExecResult:
        """Run the role's reference function on a resident region.

        compute_cycles = ceil(element_count * cycles_per_element) with the
        element count defaulting to the number of output elements.
        """
        with self.lock:
            if not 0 <= region_index < len(self.regions):
                raise RoleNotLoaded(f"no region {region_index} on {self.name}")
            region = self.regions[region_index]
            if region.loaded is None or region.loaded.role_id != role.role_id:
                held = region.loaded.role_id if region.loaded else "<empty>"
                raise RoleNotLoaded(
                    f"region {region_index} holds {held}, expected {role.role_id}"
                )
            output = run_op(role.op_type, inputs, weights)
            elements = int(output.size) if element_count is None else element_count
            cycles = math.ceil(elements * role.cycles_per_element)
            self._touch(region)
            return ExecResult(output, elements, cycles)

    def snapshot(self) -> dict:
        """JSON-friendly device state for service/reporting surfaces."""
        return {
            "name": self.name,
            "capacity": self.capacity.as_dict(),
            "shell": self.shell.as_dict(),
            "used": self.used().as_dict(),
            "regions": [
                {
                    "index": r.index,
                    "loaded": r.loaded.role_id if r.loaded else None,
                    "last_use": r.last_use,
                }
                for r in self.regions
            ],
            "reconfig_count": self.reconfig_count,
            "hit_count": self.hit_count,
        }


def utilization_rows(
    shell: ResourceVector, roles: Sequence[Role], capacity: ResourceVector
) -> list[dict]:
    """Per-row absolute and percentage utilization, shell first."""
    from .resources import format_percent, utilization_percent

    rows = [("shell", shell)] + [(role.role_id, role.footprint) for role in roles]
    table = []
    for label, vec in rows:
        cells = {}
        for name in RESOURCE_COMPONENTS:
            used = getattr(vec, name)
            cells[name] = {
                "count": used,
                "percent": format_percent(
                    utilization_percent(used, getattr(capacity, name))
                ),
            }
        table.append({"kernel": label, **cells})
    return table
