"""Built-in role benchmark: op/cycle on the accelerator vs the CPU baseline.

Each manifest role runs as a one-node graph, FPGA-placed for the accelerator
cycle count and CPU-placed for the baseline; figures are ratios of the two,
so they are independent of input size under the linear cycle model.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .graph import Graph, GraphNode
from .kernels import CONV_WEIGHT_SHAPES, FC_OP_TYPES, op_count
from .metrics import EfficiencyFigure, efficiency
from .registry import DeviceKind
from .runtime import Runtime
from .executor import place, run
from .tensors import Tensor

# Default problem sizes: fc is (M, K, N); conv is the (H, W) input extent.
FC_BENCH_SHAPE = (8, 16, 16)
CONV_BENCH_EXTENTS = {"conv5x5_i16": (16, 16), "conv3x3x2_i16": (11, 11)}


def _bench_graph(op_type: str, device: str | None) -> Graph:
    annotation = DeviceKind(device) if device else None
    if op_type in FC_OP_TYPES:
        nodes = (
            GraphNode("x", "input", (), None, {}),
            GraphNode("w", "input", (), None, {}),
            GraphNode("b", "input", (), None, {}),
            GraphNode("op", op_type, ("x", "w", "b"), annotation, {}),
            GraphNode("y", "output", ("op",), None, {}),
        )
    else:
        nodes = (
            GraphNode("x", "input", (), None, {}),
            GraphNode("op", op_type, ("x",), annotation, {}),
            GraphNode("y", "output", ("op",), None, {}),
        )
    return Graph(nodes)


def _bench_inputs(op_type: str, seed: int, scale: int) -> tuple[dict[str, Tensor], int]:
    """Generated inputs plus the op count for this problem size."""
    rng = np.random.default_rng(seed)
    if op_type in FC_OP_TYPES:
        m, k, n = (e * scale for e in FC_BENCH_SHAPE)
        inputs = {
            "x": Tensor.from_array(rng.standard_normal((m, k), dtype=np.float32)),
            "w": Tensor.from_array(rng.standard_normal((k, n), dtype=np.float32)),
            "b": Tensor.from_array(rng.standard_normal(n, dtype=np.float32)),
        }
        return inputs, op_count(op_type, (m, k), (k, n))
    if op_type in CONV_WEIGHT_SHAPES:
        h, w = (e * scale for e in CONV_BENCH_EXTENTS[op_type])
        inputs = {
            "x": Tensor.from_array(
                rng.integers(-256, 256, size=(h, w), dtype=np.int16)
            )
        }
        return inputs, op_count(op_type, (h, w))
    raise ConfigError(f"no benchmark defined for op type {op_type!r}")


def bench_roles(
    runtime: Runtime, reps: int = 1, seed: int = 0, scale: int = 1
) -> list[EfficiencyFigure]:
    """One efficiency figure per manifest role (manifest order)."""
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    if scale < 1:
        raise ConfigError("scale must be >= 1")
    agents = runtime.enumerate_agents()
    figures: list[EfficiencyFigure] = []
    for entry in runtime.manifest:
        op_type = entry.role.op_type
        inputs, ops = _bench_inputs(op_type, seed, scale)

        accel_graph = _bench_graph(op_type, "fpga")
        accel_placement = place(accel_graph, runtime.registry, agents)
        accel_cycles = 0
        for _ in range(reps):
            result = run(accel_graph, accel_placement, runtime, inputs)
            accel_cycles = result.report.compute_cycles["op"]

        cpu_graph = _bench_graph(op_type, None)
        cpu_placement = place(cpu_graph, runtime.registry, agents)
        cpu_result = run(cpu_graph, cpu_placement, runtime, inputs)
        cpu_cycles = cpu_result.report.compute_cycles["op"]

        figures.append(efficiency(entry.role.role_id, ops, accel_cycles, cpu_cycles))
    return figures
