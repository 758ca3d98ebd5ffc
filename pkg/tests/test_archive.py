"""测试运行归档"""

import json

import pytest

from cli import EXIT_INVALID, EXIT_OK, run
from models.database import get_db
from models.run_config import RunConfig
from models.run_record import RunRecord
from service import archive_service
from service.archive_service import list_runs, save_run, validate_archive_url


@pytest.fixture
def archive_url(tmp_path):
    return f"sqlite:///{tmp_path / 'runs.db'}"


def test_save_and_list(archive_url):
    config = RunConfig(subcommand="constants", s=1.0)
    envelope = {"success": True, "message": "ok", "config": config.model_dump(), "data": {"beta": 3.0}}
    saved = save_run(archive_url, config, envelope, 0)
    assert saved["id"] == 1
    assert len(saved["object_id"]) == 36

    runs = list_runs(archive_url)
    assert len(runs) == 1
    assert runs[0]["subcommand"] == "constants"
    assert runs[0]["config"]["s"] == 1.0
    assert runs[0]["exit_code"] == 0
    assert list_runs(archive_url, "a-star") == []


def test_result_is_stored_as_json(archive_url):
    config = RunConfig(subcommand="quotient")
    save_run(archive_url, config, {"success": False, "message": "x", "config": None, "data": None}, 2)
    db = next(get_db(archive_url))
    record = db.query(RunRecord).one()
    assert json.loads(record.result)["message"] == "x"
    assert record.exit_code == 2
    db.close()


def test_cli_archives_each_run(archive_url, capsys):
    assert run(["constants", "--archive", archive_url]) == EXIT_OK
    assert run(["constants", "--N", "3", "--p", "5", "--archive", archive_url]) == EXIT_INVALID
    capsys.readouterr()
    runs = list_runs(archive_url, "constants")
    assert [r["exit_code"] for r in runs] == [EXIT_OK, EXIT_INVALID]


def test_invalid_archive_url_keeps_run_exit_code(caplog, capsys):
    with pytest.raises(ValueError):
        validate_archive_url("runs.db")
    assert run(["constants", "--archive", "runs.db"]) == EXIT_OK
    assert "archive failed" in caplog.text


@pytest.mark.parametrize("url", ["nosuchdialect://runs", "sqlite:///{tmp}/missing/dir/runs.db"])
def test_database_errors_keep_run_exit_code(url, tmp_path, caplog, capsys):
    """数据库不可用时只记警告，退出码仍是子命令本身的"""
    url = url.format(tmp=tmp_path)
    assert run(["constants", "--archive", url]) == EXIT_OK
    assert run(["constants", "--N", "3", "--p", "5", "--archive", url]) == EXIT_INVALID
    assert "archive failed" in caplog.text
    capsys.readouterr()


def test_sessions_come_from_get_db(archive_url, monkeypatch):
    """归档服务经 get_db 取得会话，用完关闭"""
    closed = []

    def tracking_get_db(url):
        inner = get_db(url)
        try:
            yield next(inner)
        finally:
            inner.close()
            closed.append(url)

    monkeypatch.setattr(archive_service, "get_db", tracking_get_db)
    save_run(archive_url, RunConfig(subcommand="constants"), {"success": True}, 0)
    list_runs(archive_url)
    assert closed == [archive_url, archive_url]
