"""Hardy–Sobolev 型变分问题的数值核心

params 给出参数校验与闭式常数；quadrature 是带端点奇性的自适应求积；
funcspace、functionals 与 transforms 构造试验函数、泛函和径向变换；
scalings、minimize、limits 分别处理伸缩曲线、上界搜索与维数极限。
"""

from .errors import DivergenceError, QuadratureError, VerificationError
from .params import ProblemParams, validate

__all__ = ["DivergenceError", "ProblemParams", "QuadratureError", "VerificationError", "validate"]
