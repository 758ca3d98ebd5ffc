"""问题参数与闭式常数

参数组 (N, p, s, R, a, T) 的校验，以及 β(s)、p*(s)、Hardy 常数、
重排阈值、阈值 A、临界半径 R_a、Sobolev 最佳常数等全部闭式量。
Γ 函数一律在对数空间里求值。
"""

import logging
import math
from typing import Any, Dict, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from scipy import optimize, special

from .quadrature import QuadratureResult, QuadratureSpec, integrate_tail, log_sphere_area, sphere_area

logger = logging.getLogger(__name__)

# A 的两种算法之间允许的最大偏差
A_AGREEMENT_TOL = 1e-9
A_BISECTION_TOL = 1e-12


class ProblemParams(BaseModel):
    """经过校验的问题参数

    Attributes:
        N: 空间维数，整数且 ≥ 2
        p: 指数，1 < p < N
        s: 权指数，0 ≤ s ≤ p
        R: 球半径 > 0
        a: 势参数，0 ≤ a ≤ 1
        T: Ioku 变换的外半径，R ≤ T ≤ ∞
    """

    model_config = ConfigDict(frozen=True)

    N: int
    p: float
    s: float = 0.0
    R: float = 1.0
    a: float = 0.0
    T: float = math.inf

    @model_validator(mode="after")
    def _check_constraints(self) -> "ProblemParams":
        if self.N < 2:
            raise ValueError(f"违反约束 N ≥ 2（N={self.N}）")
        if not 1 < self.p:
            raise ValueError(f"违反约束 1 < p（p={self.p}）")
        if not self.p < self.N:
            raise ValueError(f"违反约束 p < N（N={self.N}, p={self.p}）")
        if not 0 <= self.s:
            raise ValueError(f"违反约束 0 ≤ s（s={self.s}）")
        if not self.s <= self.p:
            raise ValueError(f"违反约束 s ≤ p（s={self.s}, p={self.p}）")
        if not self.R > 0 or math.isinf(self.R):
            raise ValueError(f"违反约束 0 < R < ∞（R={self.R}）")
        if not 0 <= self.a <= 1:
            raise ValueError(f"违反约束 0 ≤ a ≤ 1（a={self.a}）")
        if not self.T >= self.R:
            raise ValueError(f"违反约束 T ≥ R（T={self.T}, R={self.R}）")
        return self

    def with_a(self, a: float) -> "ProblemParams":
        return validate({**self.model_dump(), "a": a})

    @property
    def k(self) -> float:
        """基本解指数 (N-p)/(p-1)"""
        return (self.N - self.p) / (self.p - 1.0)


def validate(raw: Mapping[str, Any] | ProblemParams) -> ProblemParams:
    """校验原始参数组

    Args:
        raw: 含 N, p, s, R, a, T 的映射

    Returns:
        校验后的 ProblemParams

    Raises:
        ValueError: 信息中指明被违反的约束
    """
    if isinstance(raw, ProblemParams):
        return raw
    try:
        return ProblemParams(**dict(raw))
    except ValidationError as e:
        messages = "; ".join(str(err.get("msg", "")).removeprefix("Value error, ") for err in e.errors())
        raise ValueError(messages) from None


def beta(params: ProblemParams) -> float:
    """β(s) = ((N-1)p - (p-1)s) / (N-p)"""
    N, p, s = params.N, params.p, params.s
    return ((N - 1) * p - (p - 1) * s) / (N - p)


def p_star(params: ProblemParams) -> float:
    """p*(s) = p(N-s) / (N-p)"""
    N, p, s = params.N, params.p, params.s
    return p * (N - s) / (N - p)


def hardy_const(params: ProblemParams) -> float:
    return ((params.N - params.p) / params.p) ** params.p


def rearrange_threshold(params: ProblemParams) -> float:
    """s(p-1) / (p(N-1))：a 不超过它时 Schwarz 对称化保持最小化问题"""
    N, p, s = params.N, params.p, params.s
    return s * (p - 1) / (p * (N - 1))


def omega(N: int | float) -> float:
    """单位球面面积 ω_(N-1)"""
    return sphere_area(N)


def a_from_T(params: ProblemParams) -> float:
    """由外半径 T 得势参数 a = 1 - (R/T)^((N-p)/(p-1))"""
    if math.isinf(params.T):
        return 1.0
    return 1.0 - (params.R / params.T) ** params.k


def T_from_a(params: ProblemParams) -> float:
    if params.a >= 1.0:
        return math.inf
    return params.R * (1.0 - params.a) ** (-1.0 / params.k)


def _potential_at(r: float, a: float, params: ProblemParams) -> float:
    bracket = 1.0 - a * (r / params.R) ** params.k
    return r ** (-params.s) * bracket ** (-beta(params))


def threshold_A(params: ProblemParams) -> float:
    """阈值 A：V_A(R) = V_1(R_1) 的解

    闭式为 A = 1 - τ^(s/(kβ))(1-τ)，τ 为重排阈值，k = (N-p)/(p-1)；
    N = 2p-1 时 k = 1，即 1 - τ^(s/β)(1-τ)。
    同时用二分法求解定义关系并与闭式比对。

    Raises:
        ValueError: s = 0 或 s = p（A 无定义）
        ArithmeticError: 两种算法偏差超过 1e-9
    """
    if not 0 < params.s < params.p:
        raise ValueError(f"A 仅在 0 < s < p 时有定义（s={params.s}, p={params.p}）")
    tau = rearrange_threshold(params)
    b = beta(params)
    # R_1 = τ^(1/k) R，故 V_1(R_1) 中出现 τ^(-s/k)
    closed = 1.0 - tau ** (params.s / (params.k * b)) * (1.0 - tau)

    r_one = critical_radius(params.with_a(1.0))
    target = _potential_at(r_one, 1.0, params)
    root = optimize.bisect(
        lambda a: _potential_at(params.R, a, params) - target,
        0.0,
        1.0 - 1e-15,
        xtol=A_BISECTION_TOL,
        rtol=4 * np.finfo(float).eps,
    )
    if abs(root - closed) > A_AGREEMENT_TOL:
        raise ArithmeticError(f"A 的闭式 {closed!r} 与求根结果 {root!r} 不一致")
    return closed


def critical_radius(params: ProblemParams) -> float:
    """V_a 在 (0, R) 上唯一临界点 R_a = (τ/a)^((p-1)/(N-p)) R

    a < τ 时 R_a > R，临界点不在球内。

    Raises:
        ValueError: a = 0 或 s = 0（无临界点）
    """
    if params.a <= 0 or params.s <= 0:
        raise ValueError("临界半径要求 a > 0 且 s > 0")
    tau = rearrange_threshold(params)
    return (tau / params.a) ** (1.0 / params.k) * params.R


def potential_minimum(params: ProblemParams) -> float:
    """黄金分割搜索 V_a 在 (0, R) 上的最小点

    先在 64 点粗网格上用 log V_a 定出夹逼区间，不借用临界半径公式；
    再对对数导数的平方做黄金分割，最小值处为零，精度不受 sqrt(eps) 限制。
    """
    if params.s <= 0 or params.a <= rearrange_threshold(params):
        raise ValueError("a 不超过重排阈值时 V_a 在 (0, R) 内单调，没有内部最小点")
    a, s, k, b = params.a, params.s, params.k, beta(params)

    def log_v(r: float) -> float:
        return math.log(_potential_at(r, a, params))

    def log_slope_sq(r: float) -> float:
        rho = (r / params.R) ** k
        slope = -s / r + b * a * k * rho / (r * (1.0 - a * rho))
        return slope * slope

    grid = params.R * np.linspace(0.0, 1.0, 66)[1:-1]
    step = grid[1] - grid[0]
    values = [log_v(r) for r in grid]
    i = int(np.argmin(values))
    if i == 0 or i == len(grid) - 1:
        raise ValueError("粗网格上的最小点落在端点，无法夹逼")
    # 最小点在 (grid[i-1], grid[i+1]) 内，两侧各留半步
    lo = max(grid[i - 1] - 0.5 * step, 0.5 * grid[0])
    hi = min(grid[i + 1] + 0.5 * step, params.R * (1.0 - 1e-9))
    fine = np.linspace(lo, hi, 41)
    j = min(max(int(np.argmin([log_slope_sq(r) for r in fine])), 1), len(fine) - 2)
    result = optimize.minimize_scalar(
        log_slope_sq,
        bracket=(fine[j - 1], fine[j], fine[j + 1]),
        method="golden",
        tol=1e-12,
    )
    return float(result.x)


def log_sobolev_constant(m: float, p: float) -> float:
    """log C_(m,p,0)，m 可取实数"""
    if not 1 < p < m:
        raise ValueError(f"Sobolev 常数要求 1 < p < m（m={m}, p={p}）")
    gammas = (
        special.gammaln(m / p)
        + special.gammaln(m + 1.0 - m / p)
        - special.gammaln(m)
        - special.gammaln(1.0 + 0.5 * m)
    )
    return float(
        0.5 * p * math.log(math.pi)
        + math.log(m)
        + (p - 1.0) * math.log((m - p) / (p - 1.0))
        + (p / m) * gammas
    )


def sobolev_constant(m: float, p: float) -> float:
    """Sobolev 最佳常数 C_(m,p,0)"""
    return math.exp(log_sobolev_constant(m, p))


def hardy_sobolev_level(params: ProblemParams, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """C_(N,p,s) 及其误差，误差由两个尾积分按一阶传播

    s = p 时取闭式 ((N-p)/p)^p，误差为零；0 ≤ s < p 时为 W_1 在 R^N 上的 Rayleigh 商。
    """
    if params.s == params.p:
        return QuadratureResult(hardy_const(params), 0.0, 0)
    N, p, s = params.N, params.p, params.s
    sigma = (p - s) / (p - 1.0)
    decay = (N - p) / (p - s)
    q = p_star(params)

    def profile(t: np.ndarray) -> np.ndarray:
        return (1.0 + t**sigma) ** (-decay)

    def slope(t: np.ndarray) -> np.ndarray:
        return decay * sigma * t ** (sigma - 1.0) * (1.0 + t**sigma) ** (-decay - 1.0)

    energy = integrate_tail(lambda t: slope(t) ** p * t ** (N - 1), spec)
    norm = integrate_tail(lambda t: profile(t) ** q * t ** (N - 1 - s), spec)
    # ω_(N-1) 在分子分母中各出现一次
    log_omega = log_sphere_area(N)
    value = math.exp(log_omega + math.log(energy.value) - (p / q) * (log_omega + math.log(norm.value)))
    relative = energy.error / energy.value + (p / q) * norm.error / norm.value
    return QuadratureResult(value, value * relative, energy.panels + norm.panels)


def hardy_sobolev_constant(params: ProblemParams, spec: QuadratureSpec | None = None) -> float:
    """C_(N,p,s) 的数值"""
    return hardy_sobolev_level(params, spec).value


def s0_level(params: ProblemParams) -> float:
    """s = 0 时 I_a 的值 C_(N,p,0)(1-a)^((N-1)p/N)"""
    if params.s != 0:
        raise ValueError("该公式只适用于 s = 0")
    N, p = params.N, params.p
    return sobolev_constant(N, p) * (1.0 - params.a) ** ((N - 1) * p / N)


def weighted_sobolev_level(max_f: float, N: int, p: float) -> float:
    """有界权 f 下的最佳常数 (max f)^(-(N-p)/N) C_(N,p,0)"""
    if not max_f > 0:
        raise ValueError(f"权的最大值必须为正：{max_f}")
    return max_f ** (-(N - p) / N) * sobolev_constant(N, p)


def derived_constants(params: ProblemParams) -> Dict[str, Any]:
    """汇总全部闭式常数；未定义的量给 None"""
    result: Dict[str, Any] = {
        "beta": beta(params),
        "p_star": p_star(params),
        "hardy_const": hardy_const(params),
        "rearrange_threshold": rearrange_threshold(params),
        "omega": omega(params.N),
        "A": None,
        "R_a": None,
    }
    if 0 < params.s < params.p:
        result["A"] = threshold_A(params)
    if params.a > 0 and params.s > 0:
        result["R_a"] = critical_radius(params)
    return result
