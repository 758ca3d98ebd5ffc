"""运行归档服务，把每次 CLI 运行写入 SQLite"""

import json
import logging
from typing import Any, Dict, List

from models.database import get_db
from models.run_config import RunConfig
from models.run_record import RunRecord

logger = logging.getLogger(__name__)


def validate_archive_url(url: str) -> None:
    """验证归档数据库 URL

    Raises:
        ValueError: URL 为空或缺少协议时
    """
    if not url or "://" not in url:
        raise ValueError(f"归档地址必须是 SQLAlchemy URL，例如 sqlite:///runs.db：{url!r}")


def save_run(url: str, config: RunConfig, envelope: Dict[str, Any], exit_code: int) -> Dict[str, Any]:
    """保存一次运行

    Args:
        url: 数据库 URL
        config: 回显的运行配置
        envelope: 输出信封 {success, message, config, data}
        exit_code: 进程退出码

    Returns:
        包含 id、object_id 与 created_at 的字典
    """
    validate_archive_url(url)
    sessions = get_db(url)
    db = next(sessions)
    try:
        record = RunRecord(
            subcommand=config.subcommand,
            config=config.model_dump_json(),
            result=json.dumps(envelope, ensure_ascii=False, default=str),
            exit_code=exit_code,
        )
        db.add(record)
        db.commit()
        db.refresh(record)
        logger.info("archived run %s (%s)", record.object_id, config.subcommand)
        return {
            "id": record.id,
            "object_id": record.object_id,
            "created_at": record.created_at.isoformat(),
        }
    finally:
        sessions.close()


def list_runs(url: str, subcommand: str | None = None) -> List[Dict[str, Any]]:
    """按时间顺序列出归档的运行，可按子命令过滤"""
    validate_archive_url(url)
    sessions = get_db(url)
    db = next(sessions)
    try:
        query = db.query(RunRecord)
        if subcommand is not None:
            query = query.filter(RunRecord.subcommand == subcommand)
        return [
            {
                "id": record.id,
                "object_id": record.object_id,
                "created_at": record.created_at.isoformat(),
                "subcommand": record.subcommand,
                "config": json.loads(record.config),
                "exit_code": record.exit_code,
            }
            for record in query.order_by(RunRecord.id).all()
        ]
    finally:
        sessions.close()
