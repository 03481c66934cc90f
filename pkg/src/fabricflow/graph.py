"""Dataflow graph parsing and validation.

Graph file: {"nodes": [{"id", "op", "inputs": [...],
"device": "fpga"|"cpu"|null, "attrs": {...}}]}. The graph must be a DAG,
every referenced id must resolve, and output nodes take exactly one input.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Mapping

from .errors import CycleDetected, ParseError, UnresolvedInput
from .kernels import CONV_WEIGHT_SHAPES, FC_OP_TYPES
from .registry import DeviceKind

INPUT = "input"
CONST = "const"
OUTPUT = "output"
STRUCTURAL_OPS = (INPUT, CONST, OUTPUT)


@dataclass(frozen=True)
class GraphNode:
    id: str
    op: str
    inputs: tuple[str, ...]
    device: DeviceKind | None = None
    attrs: Mapping = field(default_factory=dict)

    @property
    def is_compute(self) -> bool:
        return self.op not in STRUCTURAL_OPS


@dataclass(frozen=True)
class Graph:
    nodes: tuple[GraphNode, ...]

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> GraphNode:
        return self._by_id[node_id]

    def input_nodes(self) -> list[GraphNode]:
        return [n for n in self.nodes if n.op == INPUT]

    def output_nodes(self) -> list[GraphNode]:
        return [n for n in self.nodes if n.op == OUTPUT]

    def compute_nodes(self) -> list[GraphNode]:
        return [n for n in self.nodes if n.is_compute]

    def successors(self) -> dict[str, list[str]]:
        succ: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for node in self.nodes:
            for src in node.inputs:
                succ[src].append(node.id)
        return succ

    def topo_order(self) -> list[str]:
        """Deterministic topological order: ready nodes by lexicographic id."""
        indegree = {n.id: len(n.inputs) for n in self.nodes}
        succ = self.successors()
        ready = [nid for nid, deg in indegree.items() if deg == 0]
        heapq.heapify(ready)
        order: list[str] = []
        while ready:
            nid = heapq.heappop(ready)
            order.append(nid)
            for nxt in succ[nid]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    heapq.heappush(ready, nxt)
        if len(order) != len(self.nodes):
            stuck = sorted(nid for nid, deg in indegree.items() if deg > 0)
            raise CycleDetected(f"graph has a cycle involving {stuck}")
        return order


def _node_from_obj(obj, index: int) -> GraphNode:
    if not isinstance(obj, Mapping):
        raise ParseError(f"node #{index} must be an object")
    for key in ("id", "op"):
        if key not in obj or not isinstance(obj[key], str) or not obj[key]:
            raise ParseError(f"node #{index} needs a non-empty string {key!r}")
    inputs = obj.get("inputs", [])
    if not isinstance(inputs, list) or any(not isinstance(i, str) for i in inputs):
        raise ParseError(f"node {obj['id']!r}: inputs must be a list of node ids")
    device_raw = obj.get("device")
    if device_raw is None:
        device = None
    else:
        try:
            device = DeviceKind(str(device_raw).lower())
        except ValueError:
            raise ParseError(f"node {obj['id']!r}: unknown device {device_raw!r}") from None
    attrs = obj.get("attrs", {})
    if not isinstance(attrs, Mapping):
        raise ParseError(f"node {obj['id']!r}: attrs must be an object")
    return GraphNode(obj["id"], obj["op"], tuple(inputs), device, dict(attrs))


def _check_arity(node: GraphNode) -> None:
    expected = None
    if node.op in (INPUT, CONST):
        expected = 0
    elif node.op == OUTPUT:
        expected = 1
    elif node.op in FC_OP_TYPES:
        expected = 3  # input, weights, bias
    elif node.op in CONV_WEIGHT_SHAPES:
        expected = 1
    if expected is not None and len(node.inputs) != expected:
        raise ParseError(
            f"node {node.id!r} ({node.op}) takes {expected} input(s), got {len(node.inputs)}"
        )


def _check_const_attrs(node: GraphNode) -> None:
    for key in ("dtype", "shape", "data"):
        if key not in node.attrs:
            raise ParseError(f"const node {node.id!r} needs attr {key!r}")
    shape = node.attrs["shape"]
    data = node.attrs["data"]
    if not isinstance(shape, list) or not isinstance(data, list):
        raise ParseError(f"const node {node.id!r}: shape and data must be lists")
    expected = 1
    for extent in shape:
        expected *= extent if isinstance(extent, int) and extent > 0 else 0
    if expected == 0 or len(data) != expected:
        raise ParseError(
            f"const node {node.id!r}: shape {shape} needs {expected} values, got {len(data)}"
        )


def graph_from_obj(obj) -> Graph:
    """Validate an already-parsed graph object into a Graph."""
    if not isinstance(obj, Mapping) or not isinstance(obj.get("nodes"), list):
        raise ParseError("graph must be an object with a 'nodes' list")
    nodes = [_node_from_obj(entry, i) for i, entry in enumerate(obj["nodes"])]
    ids: set[str] = set()
    for node in nodes:
        if node.id in ids:
            raise ParseError(f"duplicate node id {node.id!r}")
        ids.add(node.id)
        _check_arity(node)
        if node.op == CONST:
            _check_const_attrs(node)
    for node in nodes:
        for src in node.inputs:
            if src not in ids:
                raise UnresolvedInput(f"node {node.id!r} references missing id {src!r}")
    graph = Graph(tuple(nodes))
    graph.topo_order()  # raises CycleDetected on cyclic input
    return graph


def parse_graph(text: str) -> Graph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"graph is not valid JSON: {exc.msg}", position=exc.pos) from None
    return graph_from_obj(obj)
