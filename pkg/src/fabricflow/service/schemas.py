"""Pydantic request/response models for the service API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ResourceVectorModel(BaseModel):
    lut: int = 0
    ff: int = 0
    bram: int = 0
    dsp: int = 0


class AgentModel(BaseModel):
    id: str
    kind: str
    name: str = ""
    capacity: ResourceVectorModel


class TopologyAgentModel(BaseModel):
    id: str
    kind: str
    name: str | None = None
    capacity: ResourceVectorModel | None = None
    shell: ResourceVectorModel | None = None
    regions: int | None = Field(default=None, ge=1)


class TopologyModel(BaseModel):
    agents: list[TopologyAgentModel]
    setup_us: dict[str, int] | None = None
    reconfig_us: int | None = None
    dispatch_us_tf: int | None = None
    dispatch_us_hsa: int | None = None


class FixedWeightsModel(BaseModel):
    seed: int
    scale_shift: int = Field(ge=0)


class RoleModel(BaseModel):
    role_id: str
    op_type: str
    footprint: ResourceVectorModel
    cycles_per_element: int | float | str
    description: str = ""
    fixed_weights: FixedWeightsModel | None = None


class SessionCreateRequest(BaseModel):
    layer: Literal["tf", "hsa"] = "tf"
    mode: Literal["deterministic", "concurrent"] = "deterministic"
    topology: TopologyModel | None = None
    manifest: list[RoleModel] | None = None
    calibration: dict[str, int | float | str] | None = None
    regions: int | None = Field(default=None, ge=1)
    device_id: str | None = None
    overflow_policy: Literal["block", "error"] = "block"


class SessionInfo(BaseModel):
    session_id: str
    device_id: str
    layer: str
    mode: str
    agents: list[AgentModel]
    setup_charged: bool
    packets_submitted: int
    packets_retired: int


class TensorModel(BaseModel):
    dtype: Literal["f32", "i16"]
    shape: list[int]
    data: list[int] | list[float]


class NodeModel(BaseModel):
    id: str
    op: str
    inputs: list[str] = []
    device: str | None = None
    attrs: dict = {}


class GraphModel(BaseModel):
    nodes: list[NodeModel]


class RunRequest(BaseModel):
    graph: GraphModel
    inputs: dict[str, TensorModel] = {}


class PlacementModel(BaseModel):
    agent_id: str
    kernel: str
    fallback: bool


class EventModel(BaseModel):
    time_us: int
    category: str
    amount: int
    detail: str = ""


class ReportModel(BaseModel):
    layer: str
    setup_us_total: int
    dispatch_us_total: int
    reconfig_us_total: int
    total_overhead_us: int
    compute_cycles: dict[str, int]
    counts: dict[str, int]
    events: list[EventModel]


class RunResponse(BaseModel):
    outputs: dict[str, TensorModel]
    placement: dict[str, PlacementModel]
    report: ReportModel
    report_text: str


class BenchRequest(BaseModel):
    reps: int = Field(default=1, ge=1)
    seed: int = 0
    scale: int = Field(default=1, ge=1)


class EfficiencyModel(BaseModel):
    role_id: str
    accel_op_per_cycle: float
    cpu_op_per_cycle: float
    increase: float


class BenchResponse(BaseModel):
    figures: list[EfficiencyModel]
    table: str


class RegionModel(BaseModel):
    index: int
    loaded: str | None
    last_use: int


class DeviceAgentState(BaseModel):
    name: str
    capacity: ResourceVectorModel
    shell: ResourceVectorModel
    used: ResourceVectorModel
    regions: list[RegionModel]
    reconfig_count: int
    hit_count: int


class DeviceStateResponse(BaseModel):
    device_id: str
    agents: dict[str, DeviceAgentState]


class SessionClosed(BaseModel):
    session_id: str
    closed: bool = True
