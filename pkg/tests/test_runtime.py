import json

import numpy as np
import pytest

from fabricflow import (
    FC_F32,
    CONV5X5_I16,
    DeviceKind,
    DeviceKindMismatch,
    DispatchPacket,
    InvalidDepth,
    QueueFull,
    Runtime,
    UnknownAgent,
    WaitTimeout,
    load_topology,
)
from fabricflow.metrics import DISPATCH, SETUP


def two_fpga_topology():
    obj = json.loads(
        """
        {"agents": [
            {"id": "fpga1", "kind": "fpga"},
            {"id": "cpu0", "kind": "cpu"},
            {"id": "fpga0", "kind": "fpga"}
        ]}
        """
    )
    return load_topology(obj)


def fc_packet(runtime, initial=1):
    kernel = runtime.registry.lookup(FC_F32, DeviceKind.FPGA)
    eye = np.eye(2, dtype=np.float32)
    inp = np.arange(4, dtype=np.float32).reshape(2, 2)
    zeros = np.zeros(2, dtype=np.float32)
    return DispatchPacket(
        kernel=kernel,
        inputs=[inp, eye, zeros],
        completion=runtime.create_signal(initial),
        node_id="n",
    )


def test_enumerate_agents_default_topology(runtime):
    assert [a.id for a in runtime.enumerate_agents()] == ["cpu0", "fpga0"]


def test_enumerate_agents_cpu_only():
    rt = Runtime(load_topology({"agents": [{"id": "cpu0", "kind": "cpu"}]}))
    assert [a.id for a in rt.enumerate_agents()] == ["cpu0"]


def test_enumerate_agents_orders_cpu_first_then_by_id():
    rt = Runtime(two_fpga_topology())
    assert [a.id for a in rt.enumerate_agents()] == ["cpu0", "fpga0", "fpga1"]


def test_create_queue_validation(runtime):
    queue = runtime.create_queue("fpga0", 64)
    assert queue.pending == 0
    with pytest.raises(InvalidDepth):
        runtime.create_queue("fpga0", 63)
    with pytest.raises(InvalidDepth):
        runtime.create_queue("fpga0", 1 << 17)
    with pytest.raises(UnknownAgent):
        runtime.create_queue("ghost", 64)


def test_setup_charged_once_per_session(runtime):
    runtime.create_queue("fpga0", 8)
    runtime.create_queue("cpu0", 8)
    runtime.create_queue("fpga0", 16)
    assert runtime.report.count(SETUP) == 1
    assert runtime.report.setup_us_total == 156230


def test_setup_lands_in_active_report(runtime):
    first = runtime.report
    runtime.create_queue("fpga0", 8)
    second = runtime.new_report()
    runtime.create_queue("fpga0", 8)
    assert first.count(SETUP) == 1
    assert second.count(SETUP) == 0  # session already set up


def test_dispatch_latency_charged_per_submit():
    hsa = Runtime(layer="hsa")
    queue = hsa.default_queue("fpga0")
    report = hsa.new_report()
    packet = fc_packet(hsa)
    hsa.submit(queue, packet)
    assert report.dispatch_us_total == 10
    assert packet.enqueue_time == 0

    tf = Runtime(layer="tf")
    queue = tf.default_queue("fpga0")
    report = tf.new_report()
    for _ in range(3):
        tf.submit(queue, fc_packet(tf))
    assert report.dispatch_us_total == 81
    assert report.count(DISPATCH) == 3


def test_device_kind_mismatch_rejected(runtime):
    # fpga kernel on a cpu queue
    cpu_queue = runtime.create_queue("cpu0", 8)
    with pytest.raises(DeviceKindMismatch):
        runtime.submit(cpu_queue, fc_packet(runtime))
    # cpu kernel on an fpga queue
    fpga_queue = runtime.create_queue("fpga0", 8)
    packet = fc_packet(runtime)
    packet.kernel = runtime.registry.lookup(FC_F32, DeviceKind.CPU)
    with pytest.raises(DeviceKindMismatch):
        runtime.submit(fpga_queue, packet)


def test_flush_retires_in_submission_order(runtime):
    queue = runtime.default_queue("fpga0")
    retired = []
    packets = []
    for i in range(5):
        packet = fc_packet(runtime)
        packet.node_id = f"n{i}"
        packets.append(packet)
        runtime.submit(queue, packet)
    runtime.flush(queue)
    retired = [e.detail.split()[-1] for e in runtime.report.events if e.category == "compute"]
    assert retired == [f"n{i}" for i in range(5)]
    for packet in packets:
        assert packet.completion.value == 0
        assert packet.result is not None


def test_signal_decrement_per_retirement(runtime):
    queue = runtime.default_queue("fpga0")
    shared = runtime.create_signal(3)
    for _ in range(3):
        packet = fc_packet(runtime)
        packet.completion = shared
        runtime.submit(queue, packet)
    runtime.flush(queue)
    assert shared.wait(0) == 0
    assert runtime.packets_submitted == runtime.packets_retired == 3


def test_wait_returns_value_or_times_out(runtime):
    signal = runtime.create_signal(1)
    with pytest.raises(WaitTimeout):
        signal.wait(0, timeout_us=5)
    signal.decrement()
    assert signal.wait(0, timeout_us=5) == 0
    assert signal.wait(1) == 0  # relaxed condition, no mutation
    assert signal.value == 0


def test_queue_full_error_policy():
    rt = Runtime(overflow_policy="error")
    queue = rt.create_queue("fpga0", 1)
    rt.submit(queue, fc_packet(rt))
    with pytest.raises(QueueFull):
        rt.submit(queue, fc_packet(rt))


def test_queue_full_block_policy_deterministic_drains_head():
    rt = Runtime()  # block policy by default
    queue = rt.create_queue("fpga0", 1)
    first = fc_packet(rt)
    second = fc_packet(rt)
    rt.submit(queue, first)
    rt.submit(queue, second)  # retires `first` in-line, never drops
    assert first.completion.value == 0
    assert second.completion.value == 1
    rt.flush(queue)
    assert second.completion.value == 0


def test_fpga_retirement_charges_reconfig_once(runtime):
    queue = runtime.default_queue("fpga0")
    runtime.submit(queue, fc_packet(runtime))
    runtime.flush(queue)
    assert runtime.report.reconfig_us_total == 7424
    runtime.submit(queue, fc_packet(runtime))
    runtime.flush(queue)
    assert runtime.report.reconfig_us_total == 7424  # second dispatch is a hit


def test_cpu_packets_execute_software_kernel(runtime):
    queue = runtime.create_queue("cpu0", 8)
    kernel = runtime.registry.lookup(FC_F32, DeviceKind.CPU)
    inp = np.arange(4, dtype=np.float32).reshape(2, 2)
    packet = DispatchPacket(
        kernel=kernel,
        inputs=[inp, np.eye(2, dtype=np.float32), np.zeros(2, dtype=np.float32)],
        completion=runtime.create_signal(1),
        node_id="cpu_n",
    )
    runtime.submit(queue, packet)
    runtime.flush(queue)
    assert np.array_equal(packet.result, inp)
    # cpu cycles come from the calibration table: 4 elements * 651
    assert packet.compute_cycles == 4 * 651


def test_conv_packet_uses_manifest_weights(runtime):
    kernel = runtime.registry.lookup(CONV5X5_I16, DeviceKind.FPGA)
    weights = runtime.weights.resolve(CONV5X5_I16)
    queue = runtime.default_queue("fpga0")
    packet = DispatchPacket(
        kernel=kernel,
        inputs=[np.zeros((8, 8), dtype=np.int16)],
        completion=runtime.create_signal(1),
        weights=weights,
        node_id="conv",
    )
    runtime.submit(queue, packet)
    runtime.flush(queue)
    assert packet.result.shape == (1, 4, 4)
    assert packet.compute_cycles == 16 * 50
