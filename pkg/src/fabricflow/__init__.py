"""Dispatch runtime with a virtual partially-reconfigurable FPGA backend.

Graphs annotated per node for a device kind are resolved against a kernel
registry, dispatched through user-mode queues with completion signals, and
executed on a virtual FPGA whose regions are managed by LRU eviction, with
microsecond overhead and cycle accounting throughout.
"""

from .bench import bench_roles
from .config import (
    ManifestRole,
    Topology,
    WeightStore,
    build_devices,
    build_registry,
    load_calibration,
    load_manifest,
    load_topology,
)
from .device import ExecResult, LoadResult, Region, Role, VirtualFpga
from .errors import (
    CapacityExceeded,
    ConfigError,
    CycleDetected,
    DeviceKindMismatch,
    DoubleSetup,
    DuplicateRegistration,
    FabricflowError,
    InvalidDepth,
    InvalidKernel,
    MissingInput,
    NoCpuKernel,
    ParseError,
    QueueFull,
    RoleNotLoaded,
    ShapeMismatch,
    UnknownAgent,
    UnresolvedInput,
    WaitTimeout,
    ZeroCycles,
    ZeroPercent,
)
from .executor import NodePlacement, Placement, RunResult, place, run
from .graph import Graph, GraphNode, graph_from_obj, parse_graph
from .kernels import (
    CONV3X3X2_I16,
    CONV5X5_I16,
    FC_F32,
    FC_F32_BARRIER,
    FixedWeights,
    conv2d_i16,
    fc_f32,
    fc_f32_barrier,
    op_count,
)
from .metrics import (
    CostConstants,
    CostLayer,
    EfficiencyFigure,
    TimelineReport,
    efficiency,
    render_efficiency_table,
    render_overhead_table,
)
from .registry import DeviceKind, KernelObject, KernelRegistry, SoftwareFn
from .resources import ResourceVector, derive_capacity, derive_component_capacity
from .runtime import Agent, DispatchPacket, Queue, Runtime, Signal
from .tensors import Tensor, format_literal, parse_literal

__version__ = "0.1.0"
