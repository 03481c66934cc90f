from fractions import Fraction

import pytest

from fabricflow import (
    CONV5X5_I16,
    FC_F32,
    FC_F32_BARRIER,
    DeviceKind,
    DuplicateRegistration,
    InvalidKernel,
    KernelObject,
    KernelRegistry,
    ResourceVector,
    Role,
    SoftwareFn,
)


def fpga_role(op_type=FC_F32, role_id="role1"):
    return Role(role_id, op_type, ResourceVector(lut=100), Fraction(100))


def cpu_fn(op_type=FC_F32):
    return SoftwareFn(f"cpu_{op_type}", lambda inputs, weights: inputs[0])


def test_register_and_lookup_roundtrip():
    registry = KernelRegistry()
    kernel = KernelObject(FC_F32, DeviceKind.FPGA, fpga_role())
    registry.register(kernel)
    assert registry.lookup(FC_F32, DeviceKind.FPGA) is kernel


def test_duplicate_registration_rejected():
    registry = KernelRegistry()
    registry.register(KernelObject(FC_F32, DeviceKind.FPGA, fpga_role()))
    with pytest.raises(DuplicateRegistration):
        registry.register(KernelObject(FC_F32, DeviceKind.FPGA, fpga_role(role_id="other")))


def test_body_variant_must_match_device_kind():
    with pytest.raises(InvalidKernel):
        KernelObject(CONV5X5_I16, DeviceKind.FPGA, cpu_fn(CONV5X5_I16))
    with pytest.raises(InvalidKernel):
        KernelObject(FC_F32, DeviceKind.CPU, fpga_role())


def test_lookup_miss_is_a_value():
    registry = KernelRegistry()
    assert registry.lookup(FC_F32_BARRIER, DeviceKind.FPGA) is None


def test_keys_are_per_device_kind():
    registry = KernelRegistry()
    registry.register(KernelObject(FC_F32, DeviceKind.FPGA, fpga_role()))
    # same op type on the other device kind is a different key
    assert registry.lookup(FC_F32, DeviceKind.CPU) is None
    registry.register(KernelObject(FC_F32, DeviceKind.CPU, cpu_fn()))
    assert len(registry) == 2


def test_lookup_is_pure():
    registry = KernelRegistry()
    kernel = KernelObject(FC_F32, DeviceKind.FPGA, fpga_role())
    registry.register(kernel)
    before = registry.keys()
    for _ in range(3):
        assert registry.lookup(FC_F32, DeviceKind.FPGA) is kernel
        assert registry.lookup(FC_F32, DeviceKind.CPU) is None
    assert registry.keys() == before
