"""运行归档的数据库模型"""

from datetime import datetime
import uuid

from sqlalchemy import DateTime, Integer, String, Text
from sqlalchemy.orm import Mapped, mapped_column
from sqlalchemy.sql import func

from .database import Base


class RunRecord(Base):
    """一次 CLI 运行：子命令、回显的配置、结果与退出码"""

    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    object_id: Mapped[str] = mapped_column(
        String(36),
        default=lambda: str(uuid.uuid4()),
        unique=True,
        nullable=False
    )
    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
        nullable=False
    )

    subcommand: Mapped[str] = mapped_column(String(32))
    config: Mapped[str] = mapped_column(Text)  # RunConfig 的 JSON
    result: Mapped[str] = mapped_column(Text)  # 输出信封的 JSON
    exit_code: Mapped[int] = mapped_column(Integer)

    def __repr__(self) -> str:
        return (
            f"<RunRecord(object_id={self.object_id}, "
            f"subcommand={self.subcommand}, "
            f"exit_code={self.exit_code})>"
        )
