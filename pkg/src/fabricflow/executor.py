"""Placement and graph execution on a session runtime.

Placement resolves each compute node against the kernel registry: FPGA
annotations use the registered bitstream kernel when one exists, anything
else runs on the CPU. Execution walks the graph in a deterministic
topological order (or concurrently, with per-device serialization); every
FPGA-placed node execution is exactly one dispatch packet.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

from .errors import MissingInput, NoCpuKernel, ParseError, ShapeMismatch
from .graph import CONST, INPUT, OUTPUT, Graph, GraphNode
from .registry import DeviceKind, KernelObject
from .runtime import CONCURRENT, DispatchPacket, Runtime
from .tensors import Tensor
from .metrics import TimelineReport


@dataclass(frozen=True)
class NodePlacement:
    agent_id: str
    kernel: KernelObject
    fallback: bool


Placement = dict[str, NodePlacement]


def place(graph: Graph, registry, agents) -> Placement:
    """Map every compute node to an agent and kernel.

    CPU is the universal fallback: an FPGA annotation falls back (flagged)
    when no FPGA kernel is registered or no FPGA agent exists. Unannotated
    and CPU-annotated nodes run on the first CPU agent.
    """
    cpu_agents = [a for a in agents if a.kind is DeviceKind.CPU]
    fpga_agents = [a for a in agents if a.kind is DeviceKind.FPGA]
    if not cpu_agents:
        raise NoCpuKernel("topology has no CPU agent to fall back to")
    cpu_agent = cpu_agents[0]

    placement: Placement = {}
    for node in graph.compute_nodes():
        cpu_kernel = registry.lookup(node.op, DeviceKind.CPU)
        if cpu_kernel is None:
            raise NoCpuKernel(f"no CPU kernel registered for op type {node.op!r}")
        if node.device is DeviceKind.FPGA:
            fpga_kernel = registry.lookup(node.op, DeviceKind.FPGA)
            if fpga_kernel is not None and fpga_agents:
                placement[node.id] = NodePlacement(fpga_agents[0].id, fpga_kernel, False)
            else:
                placement[node.id] = NodePlacement(cpu_agent.id, cpu_kernel, True)
        else:
            placement[node.id] = NodePlacement(cpu_agent.id, cpu_kernel, False)
    return placement


@dataclass
class RunResult:
    outputs: dict[str, Tensor]
    report: TimelineReport
    placement: Placement


def _bind_inputs(graph: Graph, inputs: Mapping[str, Tensor]) -> dict[str, Tensor]:
    wanted = {n.id: n for n in graph.input_nodes()}
    missing = sorted(set(wanted) - set(inputs))
    if missing:
        raise MissingInput(f"no tensor provided for input node(s) {missing}")
    unknown = sorted(set(inputs) - set(wanted))
    if unknown:
        raise MissingInput(f"no input node(s) named {unknown} in this graph")
    bound: dict[str, Tensor] = {}
    for name, tensor in inputs.items():
        attrs = wanted[name].attrs
        want_dtype = attrs.get("dtype")
        want_shape = attrs.get("shape")
        if want_dtype is not None and tensor.dtype != want_dtype:
            raise ShapeMismatch(f"input {name!r} must be {want_dtype}, got {tensor.dtype}")
        if want_shape is not None and tuple(want_shape) != tensor.shape:
            raise ShapeMismatch(
                f"input {name!r} must have shape {tuple(want_shape)}, got {tensor.shape}"
            )
        bound[name] = tensor
    return bound


def _materialize_const(node: GraphNode) -> Tensor:
    try:
        return Tensor.from_flat(node.attrs["dtype"], node.attrs["shape"], node.attrs["data"])
    except ValueError as exc:
        raise ParseError(f"const node {node.id!r}: {exc}") from None


def _execute_node(
    node: GraphNode,
    placement: Placement,
    runtime: Runtime,
    args: list,
) -> Tensor:
    spot = placement[node.id]
    weights = runtime.weights.resolve(node.op)
    if spot.kernel.device_kind is DeviceKind.FPGA:
        packet = DispatchPacket(
            kernel=spot.kernel,
            inputs=args,
            completion=runtime.create_signal(1),
            weights=weights,
            node_id=node.id,
        )
        queue = runtime.default_queue(spot.agent_id)
        runtime.submit(queue, packet)
        runtime.flush(queue)
        packet.completion.wait(0)
        if packet.error is not None:
            raise packet.error
        assert packet.result is not None
        return Tensor.from_array(packet.result)
    output = spot.kernel.software.fn(args, weights)
    runtime.report.record_compute(node.id, runtime.cpu_cycles(node.op, int(output.size)))
    return Tensor.from_array(output)


def run(
    graph: Graph,
    placement: Placement,
    runtime: Runtime,
    inputs: Mapping[str, Tensor] | None = None,
) -> RunResult:
    """Execute the graph; returns named output tensors and this run's report.

    Output values are independent of placement: the device model runs the
    same reference kernels as the CPU path.
    """
    values = _bind_inputs(graph, inputs or {})
    report = runtime.new_report()
    if runtime.mode == CONCURRENT:
        _run_concurrent(graph, placement, runtime, values)
    else:
        for node_id in graph.topo_order():
            node = graph.node(node_id)
            if node.op == INPUT:
                continue
            if node.op == CONST:
                values[node.id] = _materialize_const(node)
            elif node.op == OUTPUT:
                values[node.id] = values[node.inputs[0]]
            else:
                args = [values[src].array for src in node.inputs]
                values[node.id] = _execute_node(node, placement, runtime, args)
    outputs = {n.id: values[n.inputs[0]] for n in graph.output_nodes()}
    return RunResult(outputs, report, placement)


def _run_concurrent(
    graph: Graph,
    placement: Placement,
    runtime: Runtime,
    values: dict[str, Tensor],
) -> None:
    """Dependency-driven scheduler; per-device order stays serialized by the
    device queue worker, and value results match deterministic mode because
    the kernels are pure."""
    lock = threading.Lock()
    succ = graph.successors()
    indegree = {n.id: len(n.inputs) for n in graph.nodes}
    done = threading.Event()
    failures: list[BaseException] = []
    remaining = len(graph.nodes)

    pool = ThreadPoolExecutor(max_workers=max(2, len(runtime.enumerate_agents())))

    def finish(node_id: str) -> None:
        nonlocal remaining
        ready: list[str] = []
        with lock:
            remaining -= 1
            if remaining == 0:
                done.set()
            for nxt in succ[node_id]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    ready.append(nxt)
        for nxt in ready:
            pool.submit(task, nxt)

    def task(node_id: str) -> None:
        if failures:
            done.set()
            return
        node = graph.node(node_id)
        try:
            if node.op == INPUT:
                pass
            elif node.op == CONST:
                with lock:
                    values[node.id] = _materialize_const(node)
            elif node.op == OUTPUT:
                with lock:
                    values[node.id] = values[node.inputs[0]]
            else:
                with lock:
                    args = [values[src].array for src in node.inputs]
                result = _execute_node(node, placement, runtime, args)
                with lock:
                    values[node.id] = result
        except BaseException as exc:  # propagate to the caller thread
            failures.append(exc)
            done.set()
            return
        finish(node_id)

    roots = [nid for nid, deg in indegree.items() if deg == 0]
    for nid in roots:
        pool.submit(task, nid)
    done.wait()
    pool.shutdown(wait=True)
    if failures:
        raise failures[0]
