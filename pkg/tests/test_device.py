import random
from fractions import Fraction

import numpy as np
import pytest

from fabricflow import (
    CONV5X5_I16,
    FC_F32,
    CapacityExceeded,
    FixedWeights,
    ResourceVector,
    Role,
    RoleNotLoaded,
    ShapeMismatch,
    VirtualFpga,
    load_manifest,
    load_topology,
)

from oracles import LruOracle

CAPACITY = ResourceVector(lut=70560, ff=141120, bram=216, dsp=360)
SHELL = ResourceVector(lut=9915, ff=8544, bram=10, dsp=0)


def tiny_role(role_id, op_type=FC_F32, lut=1):
    return Role(role_id, op_type, ResourceVector(lut=lut), Fraction(100))


def make_device(regions=2):
    return VirtualFpga(capacity=CAPACITY, shell=SHELL, region_count=regions)


def test_reference_roles_fit_individually_and_together():
    manifest = load_manifest()
    device = VirtualFpga(capacity=CAPACITY, shell=SHELL, region_count=4)
    for entry in manifest:
        device.resource_check(entry.role)
    for entry in manifest:
        device.ensure_loaded(entry.role)
    used = device.used()
    assert used.lut == 9915 + 9984 + 9501 + 5091 + 7881 == 42372
    device.check_capacity_invariant()


def test_over_capacity_role_names_component():
    device = make_device()
    greedy = Role("huge", FC_F32, CAPACITY, Fraction(1))  # shell already consumes part
    with pytest.raises(CapacityExceeded) as exc:
        device.resource_check(greedy)
    assert exc.value.component == "lut"
    bram_hog = Role("brams", FC_F32, ResourceVector(bram=215), Fraction(1))
    with pytest.raises(CapacityExceeded) as exc:
        device.ensure_loaded(bram_hog)
    assert exc.value.component == "bram"
    assert device.reconfig_count == 0


def test_lru_example_sequence():
    device = make_device(regions=2)
    roles = {rid: tiny_role(rid) for rid in "ABC"}
    misses = [device.ensure_loaded(roles[rid]).reconfigured for rid in ["A", "B", "A", "C", "B"]]
    assert misses == [True, True, False, True, True]
    assert device.reconfig_count == 4
    assert device.hit_count == 1
    assert set(device.loaded_roles()) == {"C", "B"}


def test_single_region_repeats_hit():
    device = make_device(regions=1)
    role = tiny_role("A")
    results = [device.ensure_loaded(role).reconfigured for _ in range(3)]
    assert results == [True, False, False]
    assert device.reconfig_count == 1
    assert device.hit_count == 2


def test_empty_regions_fill_before_eviction():
    device = make_device(regions=2)
    a = device.ensure_loaded(tiny_role("A"))
    b = device.ensure_loaded(tiny_role("B"))
    assert (a.reconfigured, b.reconfigured) == (True, True)
    assert {a.region_index, b.region_index} == {0, 1}
    assert a.region_index == 0  # lowest empty index first


def test_lru_matches_oracle_on_random_sequences():
    rng = random.Random(0xFAB)
    for _ in range(300):
        regions = rng.randint(1, 8)
        alphabet = [f"r{i}" for i in range(rng.randint(1, 16))]
        roles = {rid: tiny_role(rid) for rid in alphabet}
        device = make_device(regions=regions)
        oracle = LruOracle(regions)
        sequence = [rng.choice(alphabet) for _ in range(rng.randint(0, 64))]
        for rid in sequence:
            expected_miss = oracle.touch(rid)
            assert device.ensure_loaded(roles[rid]).reconfigured == expected_miss
            loaded = device.loaded_roles()
            assert len(set(loaded)) == len(loaded)  # no duplicate residents
        assert device.reconfig_count == oracle.misses
        assert set(device.loaded_roles()) == oracle.loaded()
        device.check_capacity_invariant()


def test_stamps_strictly_increase():
    device = make_device(regions=3)
    seen = set()
    for rid in ["A", "B", "A", "C", "B", "A"]:
        result = device.ensure_loaded(tiny_role(rid))
        stamp = device.regions[result.region_index].last_use
        assert stamp not in seen
        seen.add(stamp)
    assert max(seen) == len(seen)


def test_eviction_respects_capacity_after_victim_freed():
    # two regions, both full; the new role only fits because the LRU victim
    # frees its footprint first
    capacity = ResourceVector(lut=100)
    device = VirtualFpga(capacity=capacity, shell=ResourceVector(lut=10), region_count=2)
    device.ensure_loaded(tiny_role("A", lut=40))
    device.ensure_loaded(tiny_role("B", lut=40))
    result = device.ensure_loaded(tiny_role("C", lut=45))
    assert result.reconfigured and result.region_index == 0  # A was LRU
    assert set(device.loaded_roles()) == {"B", "C"}
    device.check_capacity_invariant()
    with pytest.raises(CapacityExceeded):
        device.ensure_loaded(tiny_role("D", lut=61))  # 10 + 45 + 61 > 100 after evicting B


def test_execute_role_runs_reference_kernel_and_counts_cycles():
    device = make_device()
    manifest = {entry.role.op_type: entry for entry in load_manifest()}
    conv = manifest[CONV5X5_I16]
    load = device.ensure_loaded(conv.role)
    inp = np.zeros((8, 8), dtype=np.int16)
    result = device.execute_role(load.region_index, conv.role, [inp], conv.weights)
    assert result.output.shape == (1, 4, 4)
    assert result.element_count == 16
    assert result.compute_cycles == 16 * 50
    # stamp advanced on execution
    assert device.regions[load.region_index].last_use == 2


def test_execute_wrong_region_raises():
    device = make_device()
    a, b = tiny_role("A"), tiny_role("B")
    load_a = device.ensure_loaded(a)
    device.ensure_loaded(b)
    eye = np.eye(2, dtype=np.float32)
    zeros = np.zeros(2, dtype=np.float32)
    with pytest.raises(RoleNotLoaded):
        device.execute_role(load_a.region_index, b, [eye, eye, zeros])
    with pytest.raises(RoleNotLoaded):
        device.execute_role(7, a, [eye, eye, zeros])


def test_execute_degenerate_input_rejected():
    device = make_device()
    manifest = {entry.role.op_type: entry for entry in load_manifest()}
    conv = manifest[CONV5X5_I16]
    load = device.ensure_loaded(conv.role)
    with pytest.raises(ShapeMismatch):
        device.execute_role(
            load.region_index, conv.role, [np.zeros((3, 3), dtype=np.int16)], conv.weights
        )


def test_ceil_on_fractional_cycle_rates():
    role = Role("frac", FC_F32, ResourceVector(), Fraction(1, 3))
    device = make_device()
    load = device.ensure_loaded(role)
    inp = np.ones((2, 2), dtype=np.float32)
    eye = np.eye(2, dtype=np.float32)
    zeros = np.zeros(2, dtype=np.float32)
    result = device.execute_role(load.region_index, role, [inp, eye, zeros])
    assert result.compute_cycles == 2  # ceil(4/3)


def test_topology_defaults_build_device():
    topology = load_topology()
    fpga = topology.fpga_agents()[0]
    assert fpga.capacity == CAPACITY
    assert fpga.shell == SHELL
    assert fpga.regions == 2
