"""Command-line client: load topology + roles + graph, run, emit reports.

The CLI is a thin client of the service layer: every command drives the
FastAPI app in-process through its HTTP surface, so CLI runs and service
deployments exercise identical request/response paths.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import click

with warnings.catch_warnings():
    # starlette deprecates its httpx-based TestClient; fine for in-process use
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from .config import packaged_text
from .errors import FabricflowError
from .service.app import create_app
from .tensors import Tensor, format_literal, parse_literal


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    raise SystemExit(1)


def _read_file(path: str, what: str) -> str:
    p = Path(path)
    if not p.exists():
        _fail(f"{what} file not found: {path}")
    return p.read_text("utf-8")


def _load_json_file(path: str | None, what: str):
    if path is None:
        return None
    text = _read_file(path, what)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        _fail(f"bad {what} JSON in {path}: {exc}")


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    if target.exists():
        click.echo(f"warning: overwriting {target}", err=True)
    target.write_text(text, "utf-8")
    return target


def _canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _check(response, what: str):
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        _fail(f"{what} failed: {detail}")
    return response.json()


def _open_session(client, layer, mode, topology_path, manifest_path, regions, calibration_path=None):
    payload = {"layer": layer, "mode": mode}
    topology = _load_json_file(topology_path, "topology")
    if topology is not None:
        payload["topology"] = topology
    manifest = _load_json_file(manifest_path, "manifest")
    if manifest is not None:
        payload["manifest"] = manifest
    calibration = _load_json_file(calibration_path, "calibration")
    if calibration is not None:
        payload["calibration"] = {
            op: entry.get("cpu_cycles_per_element") if isinstance(entry, dict) else entry
            for op, entry in calibration.items()
        }
    if regions is not None:
        payload["regions"] = regions
    return _check(client.post("/sessions", json=payload), "session creation")


common_options = [
    click.option("--topology", "topology_path", type=str, default=None, help="Topology JSON file."),
    click.option("--manifest", "manifest_path", type=str, default=None, help="Role manifest JSON file."),
    click.option("--layer", type=click.Choice(["tf", "hsa"]), default="tf", show_default=True,
                 help="Which overhead constants apply."),
    click.option("--regions", type=click.IntRange(min=1), default=None,
                 help="Override the reconfigurable region count."),
    click.option("--mode", type=click.Choice(["deterministic", "concurrent"]),
                 default="deterministic", show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--out", "out_dir", type=str, default="out", show_default=True,
                 help="Output directory (files are overwritten with a warning)."),
]


def with_common_options(fn):
    for option in reversed(common_options):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Dispatch annotated dataflow graphs onto a virtual reconfigurable FPGA."""


@main.command("run")
@with_common_options
@click.option("--graph", "graph_path", type=str, default=None,
              help="Graph JSON file (default: packaged demo graph).")
@click.option("--input", "input_specs", multiple=True, metavar="NAME=PATH",
              help="Bind a tensor literal file to an input node; repeatable.")
def run_cmd(topology_path, manifest_path, layer, regions, mode, seed, out_dir, graph_path, input_specs):
    """Execute a graph and write report.json, report.txt, and output tensors."""
    if graph_path is None:
        graph_text = packaged_text("graphs/demo_fc.json")
        if not input_specs:
            input_specs = ("x=<demo>",)
    else:
        graph_text = _read_file(graph_path, "graph")
    try:
        graph_obj = json.loads(graph_text)
    except json.JSONDecodeError as exc:
        _fail(f"bad graph JSON: {exc}")

    inputs = {}
    for spec in input_specs:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            _fail(f"--input expects NAME=PATH, got {spec!r}")
        text = packaged_text("tensors/demo_input.txt") if path == "<demo>" else _read_file(path, "input tensor")
        try:
            tensor = parse_literal(text)
        except FabricflowError as exc:
            _fail(f"bad input tensor {path}: {exc}")
        inputs[name] = {"dtype": tensor.dtype, "shape": list(tensor.shape), "data": tensor.flat()}

    client = TestClient(create_app())
    session = _open_session(client, layer, mode, topology_path, manifest_path, regions)
    body = _check(
        client.post(
            f"/sessions/{session['session_id']}/run",
            json={"graph": graph_obj, "inputs": inputs},
        ),
        "run",
    )
    client.delete(f"/sessions/{session['session_id']}")

    out = Path(out_dir)
    _write(out, "report.json", _canonical_json(body["report"]))
    _write(out, "report.txt", body["report_text"])
    for name, tensor in body["outputs"].items():
        literal = format_literal(Tensor.from_flat(tensor["dtype"], tensor["shape"], tensor["data"]))
        _write(out, f"{name}.txt", literal)
    fallbacks = sorted(n for n, p in body["placement"].items() if p["fallback"])
    if fallbacks:
        click.echo(f"note: fell back to cpu for {fallbacks}", err=True)
    click.echo(body["report_text"], nl=False)
    click.echo(f"outputs written to {out}/")


@main.command("bench")
@with_common_options
@click.option("--reps", type=click.IntRange(min=1), default=1, show_default=True,
              help="Repetitions per role (figures are deterministic).")
@click.option("--scale", type=click.IntRange(min=1), default=1, show_default=True,
              help="Multiply benchmark input extents.")
@click.option("--calibration", "calibration_path", type=str, default=None,
              help="CPU cycles-per-element calibration JSON file.")
def bench_cmd(topology_path, manifest_path, layer, regions, mode, seed, out_dir, reps, scale, calibration_path):
    """Benchmark every manifest role and write the efficiency table."""
    client = TestClient(create_app())
    session = _open_session(
        client, layer, mode, topology_path, manifest_path, regions, calibration_path
    )
    body = _check(
        client.post(
            f"/sessions/{session['session_id']}/bench",
            json={"reps": reps, "seed": seed, "scale": scale},
        ),
        "bench",
    )
    client.delete(f"/sessions/{session['session_id']}")

    out = Path(out_dir)
    _write(out, "bench.json", _canonical_json(body["figures"]))
    _write(out, "bench.txt", body["table"])
    click.echo(body["table"], nl=False)


if __name__ == "__main__":
    main()
