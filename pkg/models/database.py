"""运行归档数据库配置"""

from typing import Generator
import os

from sqlalchemy import Engine, create_engine
from sqlalchemy.orm import DeclarativeBase, Session, sessionmaker

# 项目根目录
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# 默认的 SQLite 归档文件
SQLALCHEMY_DATABASE_URL = f"sqlite:///{os.path.join(BASE_DIR, 'runs.db')}"


class Base(DeclarativeBase):
    """声明性基类"""
    pass


def create_archive_engine(url: str = SQLALCHEMY_DATABASE_URL) -> Engine:
    """创建归档引擎并建表

    SQLite 连接允许跨线程使用，CLI 的并行求值不会在归档时冲突。
    """
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    engine = create_engine(url, connect_args=connect_args)
    Base.metadata.create_all(bind=engine)
    return engine


def session_factory(engine: Engine) -> sessionmaker[Session]:
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


def get_db(url: str = SQLALCHEMY_DATABASE_URL) -> Generator[Session, None, None]:
    """获取数据库会话，用完自动关闭"""
    db = session_factory(create_archive_engine(url))()
    try:
        yield db
    finally:
        db.close()
