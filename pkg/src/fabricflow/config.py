"""Topology, role manifest, and calibration loading with packaged defaults.

File formats (all UTF-8 JSON):

topology: {"agents": [{"id", "kind", "capacity": {...}, "shell": {...},
           "regions": N}], "setup_us": {"tf", "hsa"}, "reconfig_us",
           "dispatch_us_tf", "dispatch_us_hsa"}
manifest: [{"role_id", "op_type", "footprint": {"lut","ff","bram","dsp"},
            "cycles_per_element", "description"?,
            "fixed_weights"?: {"seed", "scale_shift"}}]
calibration: {op_type: {"cpu_cycles_per_element": N}}
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Mapping

from .device import Role, VirtualFpga
from .errors import ConfigError
from .kernels import (
    COMPUTE_OP_TYPES,
    CONV_WEIGHT_SHAPES,
    FixedWeights,
    run_op,
)
from .metrics import CostConstants
from .registry import DeviceKind, KernelObject, KernelRegistry, SoftwareFn
from .resources import ResourceVector, exact_fraction

DEFAULT_CAPACITY = ResourceVector(lut=70560, ff=141120, bram=216, dsp=360)
DEFAULT_SHELL = ResourceVector(lut=9915, ff=8544, bram=10, dsp=0)
DEFAULT_REGION_COUNT = 2
DEFAULT_QUEUE_DEPTH = 64

DEFAULT_WEIGHT_SEED = 1337
DEFAULT_SCALE_SHIFT = 8

# cpu cycles/element when an op type is missing from the calibration table
FALLBACK_CPU_CYCLES_PER_ELEMENT = Fraction(1)


@dataclass(frozen=True)
class AgentSpec:
    id: str
    kind: DeviceKind
    name: str = ""
    capacity: ResourceVector = field(default_factory=ResourceVector)
    shell: ResourceVector = field(default_factory=ResourceVector)
    regions: int = DEFAULT_REGION_COUNT


@dataclass(frozen=True)
class Topology:
    agents: tuple[AgentSpec, ...]
    constants: CostConstants

    def cpu_agents(self) -> list[AgentSpec]:
        return sorted((a for a in self.agents if a.kind is DeviceKind.CPU), key=lambda a: a.id)

    def fpga_agents(self) -> list[AgentSpec]:
        return sorted((a for a in self.agents if a.kind is DeviceKind.FPGA), key=lambda a: a.id)


@dataclass(frozen=True)
class ManifestRole:
    role: Role
    weights: FixedWeights | None = None


def packaged_text(relpath: str) -> str:
    return (importlib_resources.files("fabricflow") / "data" / relpath).read_text("utf-8")


def _load_json(source, what: str):
    """source may be a parsed object, a JSON string, or a filesystem path."""
    if source is None:
        raise ConfigError(f"no {what} given")
    if isinstance(source, (dict, list)):
        return source
    if isinstance(source, Path):
        source = str(source)
    if isinstance(source, str):
        text = source
        if not source.lstrip().startswith(("{", "[")):
            path = Path(source)
            if not path.exists():
                raise ConfigError(f"{what} file not found: {source}")
            text = path.read_text("utf-8")
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad {what} JSON: {exc}") from None
    raise ConfigError(f"cannot load {what} from {type(source).__name__}")


def _resource_vector(obj, what: str) -> ResourceVector:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{what} must be an object with lut/ff/bram/dsp")
    try:
        return ResourceVector.from_mapping(obj)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from None


def load_topology(source=None) -> Topology:
    """Parse a topology; None loads the packaged default."""
    if source is None:
        source = packaged_text("topology.json")
    obj = _load_json(source, "topology")
    if not isinstance(obj, Mapping) or not isinstance(obj.get("agents"), list):
        raise ConfigError("topology must be an object with an 'agents' list")

    agents: list[AgentSpec] = []
    seen: set[str] = set()
    for entry in obj["agents"]:
        if not isinstance(entry, Mapping) or "id" not in entry or "kind" not in entry:
            raise ConfigError("each agent needs at least 'id' and 'kind'")
        agent_id = str(entry["id"])
        if agent_id in seen:
            raise ConfigError(f"duplicate agent id {agent_id!r}")
        seen.add(agent_id)
        try:
            kind = DeviceKind(str(entry["kind"]).lower())
        except ValueError:
            raise ConfigError(f"agent {agent_id!r} has unknown kind {entry['kind']!r}") from None
        if kind is DeviceKind.CPU:
            capacity = _resource_vector(entry.get("capacity", {}), "capacity")
            if not capacity.is_zero():
                raise ConfigError(f"CPU agent {agent_id!r} must have zero capacity")
            agents.append(AgentSpec(agent_id, kind, str(entry.get("name", agent_id))))
        else:
            capacity = _resource_vector(entry.get("capacity", DEFAULT_CAPACITY.as_dict()), "capacity")
            shell = _resource_vector(entry.get("shell", DEFAULT_SHELL.as_dict()), "shell")
            regions = int(entry.get("regions", DEFAULT_REGION_COUNT))
            if regions < 1:
                raise ConfigError(f"agent {agent_id!r} needs at least one region")
            agents.append(
                AgentSpec(agent_id, kind, str(entry.get("name", agent_id)), capacity, shell, regions)
            )
    if not any(a.kind is DeviceKind.CPU for a in agents):
        raise ConfigError("topology must define at least one CPU agent")

    setup = obj.get("setup_us", {})
    if not isinstance(setup, Mapping):
        raise ConfigError("setup_us must be an object {'tf': N, 'hsa': N}")
    defaults = CostConstants()
    try:
        constants = CostConstants(
            setup_us_tf=int(setup.get("tf", defaults.setup_us_tf)),
            setup_us_hsa=int(setup.get("hsa", defaults.setup_us_hsa)),
            reconfig_us=int(obj.get("reconfig_us", defaults.reconfig_us)),
            dispatch_us_tf=int(obj.get("dispatch_us_tf", defaults.dispatch_us_tf)),
            dispatch_us_hsa=int(obj.get("dispatch_us_hsa", defaults.dispatch_us_hsa)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad cost constants: {exc}") from None
    return Topology(tuple(agents), constants)


def load_manifest(source=None) -> list[ManifestRole]:
    """Parse a role manifest; None loads the packaged default."""
    if source is None:
        source = packaged_text("roles.json")
    obj = _load_json(source, "manifest")
    if not isinstance(obj, list):
        raise ConfigError("manifest must be a JSON list of roles")
    roles: list[ManifestRole] = []
    seen_ids: set[str] = set()
    seen_ops: set[str] = set()
    for entry in obj:
        if not isinstance(entry, Mapping):
            raise ConfigError("each manifest role must be an object")
        missing = {"role_id", "op_type", "footprint", "cycles_per_element"} - set(entry)
        if missing:
            raise ConfigError(f"manifest role missing keys: {sorted(missing)}")
        role_id = str(entry["role_id"])
        op_type = str(entry["op_type"])
        if role_id in seen_ids:
            raise ConfigError(f"duplicate role_id {role_id!r}")
        if op_type in seen_ops:
            raise ConfigError(f"two manifest roles implement op type {op_type!r}")
        seen_ids.add(role_id)
        seen_ops.add(op_type)
        try:
            cycles = exact_fraction(entry["cycles_per_element"])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad cycles_per_element for {role_id!r}: {exc}") from None
        try:
            role = Role(
                role_id=role_id,
                op_type=op_type,
                footprint=_resource_vector(entry["footprint"], f"{role_id} footprint"),
                cycles_per_element=cycles,
                description=str(entry.get("description", "")),
            )
        except ValueError as exc:
            raise ConfigError(f"bad role {role_id!r}: {exc}") from None

        weights = None
        if op_type in CONV_WEIGHT_SHAPES:
            spec = entry.get("fixed_weights", {})
            if not isinstance(spec, Mapping):
                raise ConfigError(f"fixed_weights for {role_id!r} must be an object")
            weights = FixedWeights.generate(
                op_type,
                seed=int(spec.get("seed", DEFAULT_WEIGHT_SEED)),
                scale_shift=int(spec.get("scale_shift", DEFAULT_SCALE_SHIFT)),
            )
        roles.append(ManifestRole(role, weights))
    return roles


def load_calibration(source=None) -> dict[str, Fraction]:
    """op type -> CPU cycles per output element; None loads the packaged default."""
    if source is None:
        source = packaged_text("calibration.json")
    obj = _load_json(source, "calibration")
    if not isinstance(obj, Mapping):
        raise ConfigError("calibration must be an object keyed by op type")
    table: dict[str, Fraction] = {}
    for op_type, entry in obj.items():
        if isinstance(entry, Mapping):
            value = entry.get("cpu_cycles_per_element")
        else:
            value = entry
        try:
            cycles = exact_fraction(value)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad calibration for {op_type!r}: {exc}") from None
        if cycles <= 0:
            raise ConfigError(f"calibration for {op_type!r} must be > 0")
        table[str(op_type)] = cycles
    return table


class WeightStore:
    """Canonical fixed-weight sets, shared by CPU fallbacks and bitstream roles.

    Keyed by op type (and aliased by role id). Conv op types that were never
    configured resolve to generated defaults so a fallback-only setup still
    runs deterministically.
    """

    def __init__(self):
        self._by_key: dict[str, FixedWeights] = {}

    @classmethod
    def from_manifest(cls, manifest: list[ManifestRole]) -> "WeightStore":
        store = cls()
        for entry in manifest:
            if entry.weights is not None:
                store._by_key[entry.role.op_type] = entry.weights
                store._by_key[entry.role.role_id] = entry.weights
        return store

    def resolve(self, op_type: str) -> FixedWeights | None:
        found = self._by_key.get(op_type)
        if found is not None:
            return found
        if op_type in CONV_WEIGHT_SHAPES:
            generated = FixedWeights.generate(op_type, DEFAULT_WEIGHT_SEED, DEFAULT_SCALE_SHIFT)
            self._by_key[op_type] = generated
            return generated
        return None


def build_registry(manifest: list[ManifestRole]) -> KernelRegistry:
    """CPU kernels for every canonical op type plus one FPGA kernel per manifest role."""
    registry = KernelRegistry()
    for op_type in COMPUTE_OP_TYPES:
        registry.register(
            KernelObject(
                op_type,
                DeviceKind.CPU,
                SoftwareFn(f"cpu_{op_type}", functools.partial(run_op, op_type)),
            )
        )
    for entry in manifest:
        registry.register(KernelObject(entry.role.op_type, DeviceKind.FPGA, entry.role))
    return registry


def build_devices(
    topology: Topology, regions_override: int | None = None
) -> dict[str, VirtualFpga]:
    """One virtual device per FPGA agent, keyed by agent id."""
    if regions_override is not None and regions_override < 1:
        raise ConfigError("regions override must be >= 1")
    devices: dict[str, VirtualFpga] = {}
    for spec in topology.fpga_agents():
        devices[spec.id] = VirtualFpga(
            capacity=spec.capacity,
            shell=spec.shell,
            region_count=regions_override or spec.regions,
            name=spec.id,
        )
    return devices
