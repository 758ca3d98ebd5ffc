"""测试命令行：信封、退出码与输出格式"""

import json

import pytest

from cli import EXIT_INVALID, EXIT_OK, EXIT_VERIFICATION, run


def invoke(capsys, *argv):
    code = run(list(argv))
    return code, capsys.readouterr().out


def test_constants_json(capsys):
    code, out = invoke(capsys, "constants", "--N", "3", "--p", "2", "--s", "1", "--a", "0.5")
    assert code == EXIT_OK
    envelope = json.loads(out)
    assert envelope["success"]
    assert envelope["config"]["subcommand"] == "constants"
    assert envelope["config"]["T"] is None
    assert envelope["data"]["A"] == pytest.approx(0.52753, abs=1e-5)


def test_same_arguments_same_bytes(capsys):
    argv = ("constants", "--N", "4", "--p", "2", "--s", "1", "--a", "0.3")
    _, first = invoke(capsys, *argv)
    _, second = invoke(capsys, *argv)
    assert first == second


def test_constraint_violation_exits_2(capsys):
    code, out = invoke(capsys, "constants", "--N", "3", "--p", "5")
    assert code == EXIT_INVALID
    envelope = json.loads(out)
    assert not envelope["success"]
    assert "p < N" in envelope["message"]


def test_unknown_flag_exits_2(capsys):
    assert run(["constants", "--format", "xml"]) == EXIT_INVALID
    assert run(["frobnicate"]) == EXIT_INVALID


def test_verification_failure_exits_1(tmp_path, capsys):
    path = tmp_path / "strict.json"
    path.write_text(json.dumps({"options": {"kind": "ioku", "tol": 0.0}}), encoding="utf-8")
    code, out = invoke(capsys, "verify-transforms", "--config", str(path), "--s", "1")
    envelope = json.loads(out)
    assert code == EXIT_VERIFICATION
    assert not envelope["success"]
    assert envelope["data"]["rows"]


def test_dimension_transform_passes(capsys):
    code, out = invoke(capsys, "verify-transforms", "--kind", "dim", "--N", "3", "--p", "2", "--m", "5")
    assert code == EXIT_OK
    assert json.loads(out)["data"]["max_residual"] <= 1e-6


def test_csv_output_to_file(tmp_path, capsys):
    target = tmp_path / "constants.csv"
    code, out = invoke(capsys, "constants", "--s", "1", "--format", "csv", "--output", str(target))
    assert code == EXIT_OK
    assert out == ""
    lines = target.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# config=")
    assert json.loads(lines[0][len("# config=") :])["s"] == 1.0
    header = lines[1].split(",")
    assert "beta" in header and "C_Nps" in header
    assert len(lines) == 3


def test_config_file_with_overrides(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"N": 3, "p": 2, "s": 1, "a": 0.9, "options": {"kind": "ioku"}}), encoding="utf-8")
    code, out = invoke(capsys, "verify-transforms", "--config", str(path), "--a", "0.5")
    envelope = json.loads(out)
    assert code == EXIT_OK
    assert envelope["config"]["a"] == 0.5
    assert envelope["config"]["options"]["kind"] == "ioku"
    assert envelope["data"]["kinds"] == ["ioku"]


def test_bad_config_file_exits_2(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text("[1, 2]", encoding="utf-8")
    code, out = invoke(capsys, "constants", "--config", str(path))
    assert code == EXIT_INVALID
    assert not json.loads(out)["success"]


def test_infinite_T_is_echoed_as_null(capsys):
    code, out = invoke(capsys, "constants", "--T", "inf")
    assert code == EXIT_OK
    assert json.loads(out)["config"]["T"] is None
