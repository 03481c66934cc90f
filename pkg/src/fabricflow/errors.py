"""Exception types shared across the package."""


class FabricflowError(Exception):
    """Base class for every package-specific error."""


class ConfigError(FabricflowError):
    """Topology, manifest, or calibration input is malformed."""


class UnknownAgent(FabricflowError):
    """Agent id does not exist in the runtime topology."""


class InvalidDepth(FabricflowError):
    """Queue depth is not a power of two in [1, 65536]."""


class DuplicateRegistration(FabricflowError):
    """A kernel is already registered for this (op type, device kind) key."""


class InvalidKernel(FabricflowError):
    """Kernel body variant does not match its device kind."""


class QueueFull(FabricflowError):
    """Submission to a full queue under the `error` overflow policy."""


class DeviceKindMismatch(FabricflowError):
    """Packet kernel targets a different device kind than the queue's agent."""


class WaitTimeout(FabricflowError):
    """Signal wait condition was not met within the timeout."""


class ZeroPercent(FabricflowError):
    """Capacity derivation needs a strictly positive utilization percentage."""


class CapacityExceeded(FabricflowError):
    """Loading a role would overflow a fabric resource."""

    def __init__(self, component: str, needed: int, available: int):
        self.component = component
        self.needed = needed
        self.available = available
        super().__init__(
            f"capacity exceeded for {component}: need {needed}, capacity {available}"
        )


class RoleNotLoaded(FabricflowError):
    """Region does not currently hold the role the packet expects."""


class ShapeMismatch(FabricflowError):
    """Tensor arguments do not fit the kernel's shape/dtype contract."""


class ParseError(FabricflowError):
    """Graph or tensor text could not be parsed."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class CycleDetected(FabricflowError):
    """Graph contains a dependency cycle."""


class UnresolvedInput(FabricflowError):
    """Graph node references an input id that does not exist."""


class MissingInput(FabricflowError):
    """Run was started without a tensor for an INPUT node (or with an unknown name)."""


class NoCpuKernel(FabricflowError):
    """No CPU kernel registered for a compute op type; CPU is the universal fallback."""


class DoubleSetup(FabricflowError):
    """Setup cost was already charged to this report."""


class ZeroCycles(FabricflowError):
    """Efficiency figures need strictly positive op and cycle counts."""
