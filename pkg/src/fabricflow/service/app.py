"""FastAPI service hosting virtual devices and dispatch sessions.

Devices are stored independently of sessions: a session is one runtime
(layer, registry, reports) attached to a device set, and a later session may
reattach to the same device_id to find the fabric still configured. That is
the multi-client contract: the device is never monopolized by one session.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import bench_roles
from ..errors import FabricflowError
from ..executor import place, run
from ..graph import graph_from_obj
from ..metrics import render_efficiency_table, render_overhead_table
from ..registry import DeviceKind
from ..runtime import Runtime
from ..config import load_calibration, load_manifest, load_topology
from ..tensors import Tensor
from . import schemas


@dataclass
class SessionEntry:
    session_id: str
    device_id: str
    runtime: Runtime
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceState:
    def __init__(self):
        self.lock = threading.Lock()
        self.sessions: dict[str, SessionEntry] = {}
        self.devices: dict[str, dict] = {}

    def session(self, session_id: str) -> SessionEntry:
        with self.lock:
            entry = self.sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return entry


def _new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


def _agent_models(runtime: Runtime) -> list[schemas.AgentModel]:
    return [
        schemas.AgentModel(
            id=a.id,
            kind=a.kind.value,
            name=a.name,
            capacity=schemas.ResourceVectorModel(**a.capacity.as_dict()),
        )
        for a in runtime.enumerate_agents()
    ]


def _tensor_model(tensor: Tensor) -> schemas.TensorModel:
    return schemas.TensorModel(dtype=tensor.dtype, shape=list(tensor.shape), data=tensor.flat())


def _kernel_label(kernel) -> str:
    if kernel.device_kind is DeviceKind.FPGA:
        return kernel.role.role_id
    return kernel.software.name


def create_app() -> FastAPI:
    app = FastAPI(title="fabricflow", version=__version__)
    state = ServiceState()
    app.state.service = state

    @app.exception_handler(FabricflowError)
    async def _domain_error(_request: Request, exc: FabricflowError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/healthz", response_model=schemas.HealthResponse)
    def healthz():
        return schemas.HealthResponse(version=__version__)

    @app.post("/sessions", response_model=schemas.SessionInfo)
    def create_session(request: schemas.SessionCreateRequest):
        topology_obj = (
            request.topology.model_dump(exclude_none=True) if request.topology else None
        )
        manifest_obj = (
            [r.model_dump(exclude_none=True) for r in request.manifest]
            if request.manifest is not None
            else None
        )
        topology = load_topology(topology_obj)
        manifest = load_manifest(manifest_obj)
        calibration = (
            load_calibration(dict(request.calibration))
            if request.calibration is not None
            else None
        )

        if request.device_id is not None:
            if request.regions is not None:
                raise HTTPException(
                    status_code=400,
                    detail="regions override only applies when creating a new device",
                )
            with state.lock:
                devices = state.devices.get(request.device_id)
            if devices is None:
                raise HTTPException(status_code=404, detail=f"no device {request.device_id!r}")
            device_id = request.device_id
            runtime = Runtime(
                topology,
                layer=request.layer,
                mode=request.mode,
                manifest=manifest,
                devices=devices,
                calibration=calibration,
                overflow_policy=request.overflow_policy,
            )
        else:
            runtime = Runtime(
                topology,
                layer=request.layer,
                mode=request.mode,
                manifest=manifest,
                calibration=calibration,
                regions_override=request.regions,
                overflow_policy=request.overflow_policy,
            )
            device_id = _new_id("dev")
            with state.lock:
                state.devices[device_id] = runtime.devices

        entry = SessionEntry(_new_id("ses"), device_id, runtime)
        with state.lock:
            state.sessions[entry.session_id] = entry
        return _session_info(entry)

    def _session_info(entry: SessionEntry) -> schemas.SessionInfo:
        runtime = entry.runtime
        return schemas.SessionInfo(
            session_id=entry.session_id,
            device_id=entry.device_id,
            layer=runtime.layer.value,
            mode=runtime.mode,
            agents=_agent_models(runtime),
            setup_charged=runtime._setup_charged,
            packets_submitted=runtime.packets_submitted,
            packets_retired=runtime.packets_retired,
        )

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def session_info(session_id: str):
        return _session_info(state.session(session_id))

    @app.delete("/sessions/{session_id}", response_model=schemas.SessionClosed)
    def close_session(session_id: str):
        entry = state.session(session_id)
        with state.lock:
            state.sessions.pop(session_id, None)
        entry.runtime.close()
        return schemas.SessionClosed(session_id=session_id)

    @app.post("/sessions/{session_id}/run", response_model=schemas.RunResponse)
    def run_graph(session_id: str, request: schemas.RunRequest):
        entry = state.session(session_id)
        graph = graph_from_obj(request.graph.model_dump())
        try:
            inputs = {
                name: Tensor.from_flat(t.dtype, t.shape, t.data)
                for name, t in request.inputs.items()
            }
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"bad input tensor: {exc}") from None
        with entry.lock:
            runtime = entry.runtime
            placement = place(graph, runtime.registry, runtime.enumerate_agents())
            result = run(graph, placement, runtime, inputs)
        report = result.report.to_dict()
        return schemas.RunResponse(
            outputs={name: _tensor_model(t) for name, t in result.outputs.items()},
            placement={
                node_id: schemas.PlacementModel(
                    agent_id=spot.agent_id,
                    kernel=_kernel_label(spot.kernel),
                    fallback=spot.fallback,
                )
                for node_id, spot in result.placement.items()
            },
            report=schemas.ReportModel(**report),
            report_text=render_overhead_table(report),
        )

    @app.post("/sessions/{session_id}/bench", response_model=schemas.BenchResponse)
    def bench(session_id: str, request: schemas.BenchRequest):
        entry = state.session(session_id)
        with entry.lock:
            figures = bench_roles(
                entry.runtime, reps=request.reps, seed=request.seed, scale=request.scale
            )
        return schemas.BenchResponse(
            figures=[schemas.EfficiencyModel(**fig.to_dict()) for fig in figures],
            table=render_efficiency_table(figures),
        )

    @app.get("/devices/{device_id}", response_model=schemas.DeviceStateResponse)
    def device_state(device_id: str):
        with state.lock:
            devices = state.devices.get(device_id)
        if devices is None:
            raise HTTPException(status_code=404, detail=f"no device {device_id!r}")
        agents = {}
        for agent_id, device in devices.items():
            snap = device.snapshot()
            agents[agent_id] = schemas.DeviceAgentState(
                name=snap["name"],
                capacity=schemas.ResourceVectorModel(**snap["capacity"]),
                shell=schemas.ResourceVectorModel(**snap["shell"]),
                used=schemas.ResourceVectorModel(**snap["used"]),
                regions=[schemas.RegionModel(**r) for r in snap["regions"]],
                reconfig_count=snap["reconfig_count"],
                hit_count=snap["hit_count"],
            )
        return schemas.DeviceStateResponse(device_id=device_id, agents=agents)

    return app


app = create_app()
