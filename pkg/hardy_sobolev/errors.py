"""数值核心的异常类型"""

from typing import Any, Dict

from .functionals import DivergenceError
from .quadrature import QuadratureError


class VerificationError(RuntimeError):
    """数值校验（恒等式残差、衰减斜率、单调性）未达到容差

    data 保存失败时已经算出的结果，CLI 照常输出。
    """

    def __init__(self, message: str, data: Dict[str, Any] | None = None):
        super().__init__(message)
        self.data = data


__all__ = ["DivergenceError", "QuadratureError", "VerificationError"]
