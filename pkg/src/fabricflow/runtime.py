"""Dispatch substrate: agents, user-mode queues, signals, and the session runtime.

A Runtime is one session over a topology: it owns the kernel registry, the
cost constants, the active timeline report, and (possibly shared) virtual
devices. Device state outlives sessions — fabric configuration persists the
way a bitstream survives a process restart — while setup is charged once per
session, into whichever report is active when the first queue is created.
"""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .config import (
    DEFAULT_QUEUE_DEPTH,
    FALLBACK_CPU_CYCLES_PER_ELEMENT,
    ManifestRole,
    Topology,
    WeightStore,
    build_devices,
    build_registry,
    load_calibration,
    load_manifest,
    load_topology,
)
from .device import VirtualFpga
from .errors import (
    ConfigError,
    DeviceKindMismatch,
    InvalidDepth,
    QueueFull,
    UnknownAgent,
    WaitTimeout,
)
from .kernels import BARRIER_OP_TYPES, FixedWeights
from .metrics import (
    DISPATCH,
    RECONFIG,
    SETUP,
    CostLayer,
    TimelineReport,
)
from .registry import DeviceKind, KernelObject, KernelRegistry
from .resources import ResourceVector

DETERMINISTIC = "deterministic"
CONCURRENT = "concurrent"
MAX_QUEUE_DEPTH = 1 << 16


@dataclass(frozen=True)
class Agent:
    id: str
    kind: DeviceKind
    name: str = ""
    capacity: ResourceVector = field(default_factory=ResourceVector)

    def __post_init__(self):
        if self.kind is DeviceKind.CPU and not self.capacity.is_zero():
            raise ValueError(f"CPU agent {self.id!r} must have zero capacity")


class Signal:
    """Waitable decrementing counter; one decrement per packet retirement."""

    def __init__(self, initial: int, blocking: bool = False):
        self._value = initial
        self._blocking = blocking
        self._cond = threading.Condition()

    @property
    def value(self) -> int:
        with self._cond:
            return self._value

    def decrement(self) -> int:
        with self._cond:
            self._value -= 1
            self._cond.notify_all()
            return self._value

    def wait(self, value_leq: int = 0, timeout_us: int | None = None) -> int:
        """Return the value once it is <= value_leq; the wait never mutates it.

        Non-blocking signals (deterministic mode) time out immediately when
        unsatisfied: with a single execution context nothing else could ever
        change the value while we wait.
        """
        deadline = None if timeout_us is None else time.monotonic() + timeout_us / 1e6
        with self._cond:
            while self._value > value_leq:
                if not self._blocking:
                    raise WaitTimeout(f"signal at {self._value}, waited for <= {value_leq}")
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise WaitTimeout(
                        f"signal at {self._value} after {timeout_us} us, waited for <= {value_leq}"
                    )
                self._cond.wait(remaining)
            return self._value


@dataclass
class DispatchPacket:
    """One unit of work: a kernel, its argument buffers, and a completion signal."""

    kernel: KernelObject
    inputs: Sequence[np.ndarray]
    completion: Signal
    weights: FixedWeights | None = None
    node_id: str = ""
    enqueue_time: int = -1
    result: np.ndarray | None = None
    compute_cycles: int = 0
    error: BaseException | None = None


class Queue:
    """In-order user-mode queue bound to one agent."""

    def __init__(self, agent: Agent, depth: int, policy: str):
        self.agent = agent
        self.depth = depth
        self.policy = policy
        self._pending: deque[DispatchPacket] = deque()
        self._inflight = 0
        self._cond = threading.Condition()
        self._closed = False

    def __len__(self) -> int:
        with self._cond:
            return len(self._pending)

    @property
    def pending(self) -> int:
        return len(self)


class Runtime:
    """One dispatch session over a topology.

    mode='deterministic' executes everything on the calling thread with
    reproducible timestamps; mode='concurrent' drains each queue on a worker
    thread and serializes charges.
    """

    def __init__(
        self,
        topology: Topology | None = None,
        *,
        layer: CostLayer | str = CostLayer.TF,
        mode: str = DETERMINISTIC,
        manifest: list[ManifestRole] | None = None,
        registry: KernelRegistry | None = None,
        devices: Mapping[str, VirtualFpga] | None = None,
        calibration: Mapping[str, Fraction] | None = None,
        regions_override: int | None = None,
        overflow_policy: str = "block",
    ):
        if mode not in (DETERMINISTIC, CONCURRENT):
            raise ConfigError(f"unknown mode {mode!r}")
        if overflow_policy not in ("block", "error"):
            raise ConfigError(f"unknown overflow policy {overflow_policy!r}")
        self.topology = topology if topology is not None else load_topology()
        self.layer = CostLayer(layer)
        self.mode = mode
        self.overflow_policy = overflow_policy
        self.constants = self.topology.constants
        self.manifest = manifest if manifest is not None else load_manifest()
        self.registry = registry if registry is not None else build_registry(self.manifest)
        self.weights = WeightStore.from_manifest(self.manifest)
        self.calibration = dict(calibration) if calibration is not None else load_calibration()

        self._agents: dict[str, Agent] = {}
        for spec in self.topology.cpu_agents() + self.topology.fpga_agents():
            self._agents[spec.id] = Agent(spec.id, spec.kind, spec.name, spec.capacity)

        if devices is not None:
            missing = [a.id for a in self.topology.fpga_agents() if a.id not in devices]
            if missing:
                raise ConfigError(f"no device supplied for FPGA agents {missing}")
            self.devices = dict(devices)
        else:
            self.devices = build_devices(self.topology, regions_override)

        self.report = TimelineReport(self.layer)
        self._setup_charged = False
        self._default_queues: dict[str, Queue] = {}
        self._queues: list[Queue] = []
        self._workers: list[threading.Thread] = []
        self._session_lock = threading.Lock()
        self.packets_submitted = 0
        self.packets_retired = 0

    # -- agents and devices --

    def enumerate_agents(self) -> list[Agent]:
        """All agents, CPU agents first, then FPGA agents, each ordered by id."""
        ordered = [a for a in self._agents.values() if a.kind is DeviceKind.CPU]
        ordered += [a for a in self._agents.values() if a.kind is DeviceKind.FPGA]
        return ordered

    def agent(self, agent_id: str) -> Agent:
        try:
            return self._agents[agent_id]
        except KeyError:
            raise UnknownAgent(f"no agent {agent_id!r} in this runtime") from None

    def device(self, agent_id: str) -> VirtualFpga:
        agent = self.agent(agent_id)
        if agent.kind is not DeviceKind.FPGA:
            raise UnknownAgent(f"agent {agent_id!r} is not an FPGA")
        return self.devices[agent_id]

    # -- reports --

    def new_report(self) -> TimelineReport:
        """Rotate the active report; session state (setup, devices) persists."""
        self.report = TimelineReport(self.layer)
        return self.report

    def _charge_setup_once(self) -> None:
        with self._session_lock:
            if not self._setup_charged:
                self.report.charge(SETUP, self.constants.setup_us(self.layer), "device/kernel setup")
                self._setup_charged = True

    # -- queues and signals --

    def create_queue(self, agent_id: str, depth: int = DEFAULT_QUEUE_DEPTH) -> Queue:
        agent = self.agent(agent_id)
        if not isinstance(depth, int) or depth < 1 or depth > MAX_QUEUE_DEPTH or depth & (depth - 1):
            raise InvalidDepth(f"queue depth must be a power of two in [1, {MAX_QUEUE_DEPTH}], got {depth}")
        self._charge_setup_once()
        queue = Queue(agent, depth, self.overflow_policy)
        self._queues.append(queue)
        if self.mode == CONCURRENT:
            worker = threading.Thread(target=self._drain_loop, args=(queue,), daemon=True)
            self._workers.append(worker)
            worker.start()
        return queue

    def default_queue(self, agent_id: str) -> Queue:
        if agent_id not in self._default_queues:
            self._default_queues[agent_id] = self.create_queue(agent_id)
        return self._default_queues[agent_id]

    def create_signal(self, initial: int) -> Signal:
        return Signal(initial, blocking=self.mode == CONCURRENT)

    def submit(self, queue: Queue, packet: DispatchPacket) -> None:
        """Append a packet; dispatch latency is charged at submission."""
        if packet.kernel.device_kind is not queue.agent.kind:
            raise DeviceKindMismatch(
                f"{packet.kernel.device_kind.value} kernel {packet.kernel.op_type!r} "
                f"submitted to {queue.agent.kind.value} queue {queue.agent.id!r}"
            )
        while True:
            head = None
            with queue._cond:
                if len(queue._pending) + queue._inflight < queue.depth:
                    packet.enqueue_time = self.report.now_us
                    self.report.charge(
                        DISPATCH,
                        self.constants.dispatch_us(self.layer),
                        f"dispatch {packet.node_id or packet.kernel.op_type}",
                    )
                    self.packets_submitted += 1
                    queue._pending.append(packet)
                    queue._cond.notify_all()
                    return
                if queue.policy == "error":
                    raise QueueFull(f"queue on {queue.agent.id!r} is at depth {queue.depth}")
                if self.mode == CONCURRENT:
                    queue._cond.wait()
                    continue
                # Deterministic block policy: the caller is also the consumer,
                # so retire the head in-line instead of parking forever.
                head = queue._pending.popleft()
            if head is not None:
                self._retire(queue, head)

    def flush(self, queue: Queue) -> None:
        """Retire every pending packet (deterministic) or wait for the drain."""
        if self.mode == DETERMINISTIC:
            while True:
                with queue._cond:
                    if not queue._pending:
                        return
                    packet = queue._pending.popleft()
                self._retire(queue, packet)
        else:
            with queue._cond:
                queue._cond.wait_for(lambda: not queue._pending and queue._inflight == 0)

    def _drain_loop(self, queue: Queue) -> None:
        while True:
            with queue._cond:
                while not queue._pending and not queue._closed:
                    queue._cond.wait()
                if queue._closed and not queue._pending:
                    return
                packet = queue._pending.popleft()
                queue._inflight += 1
                queue._cond.notify_all()
            try:
                self._retire(queue, packet)
            except Exception:
                pass  # recorded on the packet; the waiter re-raises it
            finally:
                with queue._cond:
                    queue._inflight -= 1
                    queue._cond.notify_all()

    def close(self) -> None:
        for queue in self._queues:
            with queue._cond:
                queue._closed = True
                queue._cond.notify_all()
        for worker in self._workers:
            worker.join(timeout=5)
        self._workers.clear()

    def __enter__(self) -> "Runtime":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- execution --

    def cpu_cycles(self, op_type: str, element_count: int) -> int:
        rate = self.calibration.get(op_type, FALLBACK_CPU_CYCLES_PER_ELEMENT)
        return math.ceil(element_count * rate)

    def _retire(self, queue: Queue, packet: DispatchPacket) -> None:
        """Execute one packet and decrement its completion signal exactly once.

        Failures are recorded on the packet before the decrement so waiters
        always wake up, with or without a result.
        """
        try:
            if packet.kernel.device_kind is DeviceKind.FPGA:
                role = packet.kernel.role
                device = self.devices[queue.agent.id]
                with device.lock:
                    load = device.ensure_loaded(role)
                    if load.reconfigured:
                        self.report.charge(RECONFIG, self.constants.reconfig_us, f"load {role.role_id}")
                    result = device.execute_role(
                        load.region_index, role, packet.inputs, packet.weights
                    )
                packet.result = result.output
                packet.compute_cycles = result.compute_cycles
            else:
                output = packet.kernel.software.fn(packet.inputs, packet.weights)
                packet.result = output
                packet.compute_cycles = self.cpu_cycles(packet.kernel.op_type, int(output.size))
            name = packet.node_id or packet.kernel.op_type
            self.report.record_compute(name, packet.compute_cycles)
            if packet.kernel.op_type in BARRIER_OP_TYPES:
                self.report.record_barrier(name)
        except BaseException as exc:
            packet.error = exc
            raise
        finally:
            self.packets_retired += 1
            packet.completion.decrement()
