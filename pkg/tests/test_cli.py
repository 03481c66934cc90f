import json

from click.testing import CliRunner

from fabricflow.cli import main
from fabricflow.config import packaged_text


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def test_run_demo_writes_reports(tmp_path):
    out = tmp_path / "out"
    result = invoke("run", "--out", str(out))
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["total_overhead_us"] == 163735
    text = (out / "report.txt").read_text()
    for row in ("device/kernel setup", "reconfiguration", "dispatch latency"):
        assert row in text
    assert (out / "y.txt").read_text().startswith("f32 2 4:")


def test_run_missing_graph_file_exits_1(tmp_path):
    result = invoke("run", "--graph", "no/such/graph.json", "--out", str(tmp_path))
    assert result.exit_code == 1
    assert "file not found" in result.output


def test_run_thrash_demo_regions_1(tmp_path):
    graph = tmp_path / "thrash.json"
    graph.write_text(packaged_text("graphs/demo_thrash.json"))
    tensor = tmp_path / "x.txt"
    tensor.write_text("f32 2 4: 1 2 3 4 5 6 7 8\n")
    out = tmp_path / "out"
    result = invoke(
        "run", "--layer", "hsa", "--regions", "1",
        "--graph", str(graph), "--input", f"x={tensor}", "--out", str(out),
    )
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["counts"]["reconfig"] == report["counts"]["dispatch"] == 4
    assert report["layer"] == "hsa"


def test_run_is_byte_identical_for_same_config(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert invoke("run", "--out", str(first)).exit_code == 0
    assert invoke("run", "--out", str(second)).exit_code == 0
    assert (first / "report.json").read_bytes() == (second / "report.json").read_bytes()


def test_run_overwrite_warns(tmp_path):
    out = tmp_path / "out"
    assert invoke("run", "--out", str(out)).exit_code == 0
    result = invoke("run", "--out", str(out))
    assert result.exit_code == 0
    assert "warning: overwriting" in result.output


def test_bench_prints_reference_table(tmp_path):
    out = tmp_path / "bench"
    result = invoke("bench", "--out", str(out))
    assert result.exit_code == 0, result.output
    for needle in ("6.51x", "3.03x", "18.62x", "6.98x"):
        assert needle in result.output
    figures = json.loads((out / "bench.json").read_text())
    assert [f["role_id"] for f in figures] == ["role1", "role2", "role3", "role4"]


def test_bench_reps_do_not_change_figures(tmp_path):
    one = tmp_path / "one"
    many = tmp_path / "many"
    assert invoke("bench", "--reps", "1", "--out", str(one)).exit_code == 0
    assert invoke("bench", "--reps", "5", "--out", str(many)).exit_code == 0
    assert (one / "bench.json").read_text() == (many / "bench.json").read_text()


def test_bench_custom_calibration_all_equal(tmp_path):
    calibration = tmp_path / "flat.json"
    calibration.write_text(json.dumps({
        "fc_f32": {"cpu_cycles_per_element": 100},
        "fc_f32_barrier": {"cpu_cycles_per_element": 100},
        "conv5x5_i16": {"cpu_cycles_per_element": 50},
        "conv3x3x2_i16": {"cpu_cycles_per_element": 50},
    }))
    out = tmp_path / "out"
    result = invoke("bench", "--calibration", str(calibration), "--out", str(out))
    assert result.exit_code == 0, result.output
    figures = json.loads((out / "bench.json").read_text())
    assert all(f["increase"] == 1.0 for f in figures)
