from __future__ import annotations

import cmath
import json
import zlib
from pathlib import Path

import pytest

from enclosure.app import cli, suites
from enclosure.api import storage

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.setenv("ENCLOSURE_DATA_DIR", str(tmp_path / "state"))


def last_json(text: str) -> dict:
    return json.loads(text.strip().splitlines()[-1])


def test_forward_then_probe(tmp_path, capsys):
    out = tmp_path / "disc.ffm"
    assert cli.main(["forward", "--scene", str(FIXTURES / "disc_scene.json"), "--out", str(out), "--M", "128"]) == 0
    summary = last_json(capsys.readouterr().out)
    assert summary["provenance"] == "analytic"
    assert summary["M"] == 128
    assert summary["reciprocity_residual"] <= 1e-12
    assert not summary["eigen_guard"]["flagged"]
    assert storage.load_matrix(out).M == 128

    trace_csv = tmp_path / "trace.csv"
    code = cli.main(["probe", "--matrix", str(out), "--y", "-1", "0", "--omega", "1", "0",
                     "--n", "1", "--out", str(trace_csv)])
    assert code == 0
    assert capsys.readouterr().out.startswith("Growth ")
    assert len(trace_csv.read_text().splitlines()) == 1 + 17


def test_probe_with_too_few_nodes_is_an_input_error(tmp_path, capsys):
    out = tmp_path / "small.ffm"
    cli.main(["forward", "--scene", str(FIXTURES / "disc_scene.json"), "--out", str(out), "--M", "32"])
    capsys.readouterr()
    code = cli.main(["probe", "--matrix", str(out), "--y", "-1", "0", "--omega", "1", "0"])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ResolutionError"


def test_odd_node_count_rejected(tmp_path, capsys):
    code = cli.main(["forward", "--scene", str(FIXTURES / "disc_scene.json"),
                     "--out", str(tmp_path / "x.ffm"), "--M", "33"])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["exit_code"] == 2


def test_wave_number_mismatch_exits_3(tmp_path, capsys):
    out = tmp_path / "disc.ffm"
    cli.main(["forward", "--scene", str(FIXTURES / "disc_scene.json"), "--out", str(out), "--M", "128"])
    capsys.readouterr()
    code = cli.main(["probe", "--matrix", str(out), "--k", "3", "--y", "-1", "0", "--omega", "1", "0"])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "ConsistencyError"


def test_scan_writes_csv_and_pgm(tmp_path, capsys):
    out = tmp_path / "disc.ffm"
    cli.main(["forward", "--scene", str(FIXTURES / "disc_scene.json"), "--out", str(out), "--M", "96"])
    capsys.readouterr()
    csv_path, pgm_path = tmp_path / "map.csv", tmp_path / "map.pgm"
    code = cli.main(["--threads", "2", "scan", "--matrix", str(out), "--grid", "-1.5", "-1.0", "0", "0", "2", "1",
                     "--omega-count", "2", "--n-list", "1", "--N-min", "8", "--N-max", "13",
                     "--out-csv", str(csv_path), "--out-pgm", str(pgm_path), "--no-progress"])
    assert code == 0
    summary = last_json(capsys.readouterr().out)
    assert summary["points"] == 2
    assert len(csv_path.read_text().splitlines()) == 3
    assert pgm_path.read_bytes().startswith(b"P5\n2 1\n255\n")


def test_scan_output_is_independent_of_threads(tmp_path, capsys):
    out = tmp_path / "disc.ffm"
    cli.main(["forward", "--scene", str(FIXTURES / "disc_scene.json"), "--out", str(out), "--M", "96"])
    outputs = []
    for threads in ("1", "8"):
        csv_path, pgm_path = tmp_path / f"map{threads}.csv", tmp_path / f"map{threads}.pgm"
        code = cli.main(["--threads", threads, "scan", "--matrix", str(out),
                         "--grid", "-1.5", "-0.5", "-0.5", "0.5", "3", "2", "--omega-count", "4",
                         "--n-list", "1", "--N-min", "8", "--N-max", "17",
                         "--out-csv", str(csv_path), "--out-pgm", str(pgm_path), "--no-progress"])
        assert code == 0
        outputs.append((csv_path.read_bytes(), pgm_path.read_bytes()))
    capsys.readouterr()
    assert outputs[0] == outputs[1]


def test_scene_scan_reports_visible_points_inside_obstacles(tmp_path, capsys):
    code = cli.main(["scan", "--scene", str(FIXTURES / "disc_scene.json"),
                     "--grid", "-1.0", "0.5", "0", "0", "2", "1", "--omega-count", "4", "--n-list", "1",
                     "--out-csv", str(tmp_path / "map.csv"), "--out-pgm", str(tmp_path / "map.pgm"),
                     "--no-progress"])
    assert code == 0
    summary = last_json(capsys.readouterr().out)
    assert summary["points"] == 2
    assert summary["visible"] == 1
    assert summary["visible_inside_obstacles"] == 0


def test_verify_list_and_single_suite(capsys):
    assert cli.main(["verify", "--list"]) == 0
    assert capsys.readouterr().out.split() == list(suites.SUITES)
    assert cli.main(["verify", "--suite", "jhat-bound"]) == 0
    result = last_json(capsys.readouterr().out)
    assert result["suite"] == "jhat-bound"
    assert result["passed"]


def test_verify_failure_exits_1(monkeypatch, capsys):
    monkeypatch.setitem(suites.SUITES, "jhat-bound", lambda seed=0, opts=None: suites.SuiteResult("jhat-bound", False))
    assert cli.main(["verify", "--suite", "jhat-bound"]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "VerificationError"


def test_ml_eval(capsys):
    assert cli.main(["ml-eval", "--n", "1", "--x", "0.3", "0.2", "--tau", "1.5", "--k", "2"]) == 0
    data = last_json(capsys.readouterr().out)
    assert complex(*data["E_alpha"]) == pytest.approx(cmath.exp(1.5 * (0.3 + 0.2j)), rel=1e-13)
    assert set(data) == {"E_alpha", "E_alpha_k", "s", "Hg", "E_directional", "E_directional_gradient"}
    assert len(data["E_directional_gradient"]) == 2
    assert data["s"] > 0.0


@pytest.mark.parametrize("content", ["options: [unclosed\n", None])
def test_bad_config_exits_2(tmp_path, capsys, content):
    path = tmp_path / "settings.yaml"
    if content is not None:
        path.write_text(content)
    assert cli.main(["--config", str(path), "verify", "--list"]) == 2
    assert json.loads(capsys.readouterr().err)["exit_code"] == 2


def test_undecodable_matrix_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.ffm"
    body = b"FFM v1\nM=16 k=2 provenance=mfs\n\xff\xfe\n"
    path.write_bytes(body + f"crc32={zlib.crc32(body) & 0xFFFFFFFF:08x}\n".encode("ascii"))
    code = cli.main(["probe", "--matrix", str(path), "--y", "-1", "0", "--omega", "1", "0"])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "MatrixFormatError"


def test_missing_scene_exits_2(tmp_path, capsys):
    code = cli.main(["forward", "--scene", str(tmp_path / "nope.json"), "--out", str(tmp_path / "F.ffm")])
    assert code == 2
