"""CLI 运行配置"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from hardy_sobolev.quadrature import DEFAULT_RTOL


class RunConfig(BaseModel):
    """一次运行的完整配置，输出中原样回显

    T 为 None 表示 T = ∞（JSON 里没有无穷大）。
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    subcommand: str = Field(..., description="子命令名")
    N: int = Field(3, description="空间维数")
    p: float = Field(2.0, description="指数 p")
    s: float = Field(0.0, description="权指数 s")
    R: float = Field(1.0, description="球半径")
    a: float = Field(0.0, description="势参数 a")
    T: Optional[float] = Field(None, description="Ioku 外半径，缺省为 ∞")
    rtol: float = Field(DEFAULT_RTOL, description="求积相对容差")
    max_panels: int = Field(4096, description="自适应求积的最大面板数")
    output: Optional[str] = Field(None, description="输出文件，缺省写到标准输出")
    format: Literal["json", "csv"] = Field("json", description="输出格式")
    threads: Optional[int] = Field(None, description="线程上限，缺省为可用核数")
    archive: Optional[str] = Field(None, description="归档数据库 URL")
    options: Dict[str, Any] = Field(default_factory=dict, description="子命令专有参数")

    def params_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "p": self.p,
            "s": self.s,
            "R": self.R,
            "a": self.a,
            "T": math.inf if self.T is None else self.T,
        }


def load_config_file(path: str | Path) -> Dict[str, Any]:
    """读取 JSON 配置文件

    Raises:
        ValueError: 文件不是 JSON 对象
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"配置文件必须是 JSON 对象：{path}")
    return data
