"""势 V_a、能量与加权范数泛函，以及 Rayleigh 商"""

import logging
import math
from typing import Any, Dict

import numpy as np
from pydantic import BaseModel

from .funcspace import AxisymFunction, RadialFunction
from .params import ProblemParams, beta, p_star
from .quadrature import (
    QuadratureError,
    QuadratureResult,
    QuadratureSpec,
    integrate_axisym,
    integrate_radial,
    integrate_tail,
    spec_for_potential,
    sphere_area,
)

logger = logging.getLogger(__name__)

TestFunction = RadialFunction | AxisymFunction

# a = 1 时在 r = R(1 - 10^-j) 处探测可积性
BOUNDARY_DECADES = (2, 3, 4, 5, 6)


class DivergenceError(QuadratureError):
    """a = 1 时加权范数在 r = R 处不可积"""


def _one_minus_a_rho(r: np.ndarray, params: ProblemParams) -> np.ndarray:
    """1 - a (r/R)^k，a = 1 且 r → R 时不损失精度"""
    with np.errstate(divide="ignore"):
        one_minus_rho = np.where(r > 0, -np.expm1(params.k * np.log(np.maximum(r, 1e-300) / params.R)), 1.0)
    return (1.0 - params.a) + params.a * one_minus_rho


def potential_values(r: np.ndarray, params: ProblemParams) -> np.ndarray:
    """向量化的 V_a，不做区间检查，供积分器使用"""
    with np.errstate(divide="ignore"):
        return r ** (-params.s) * _one_minus_a_rho(r, params) ** (-beta(params))


def potential(r: Any, params: ProblemParams) -> np.ndarray:
    """V_a(r) = r^(-s) (1 - a(r/R)^k)^(-β)

    Raises:
        ValueError: r 不在 (0, R] 内，或 a = 1 时 r = R（权为无穷）
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > params.R):
        raise ValueError(f"r 必须在 (0, R] 内（R={params.R}）")
    if params.a == 1.0 and np.any(r == params.R):
        raise ValueError("a = 1 时 V_a 在 r = R 处为无穷")
    return potential_values(r, params)


def _origin_sigma(exponent: float) -> float:
    """被积函数 ~ r^exponent 时左端需要声明的奇性阶"""
    sigma = max(0.0, -exponent)
    if sigma >= 1.0:
        raise ValueError(f"被积函数在原点 ~ r^{exponent:g}，不可积")
    return sigma


def _integrate_on_support(f, support: float, spec: QuadratureSpec, breaks) -> QuadratureResult:
    if math.isinf(support):
        return integrate_tail(f, spec)
    return integrate_radial(f, spec, 0.0, support, breaks)


def _origin_spec(u: AxisymFunction, spec: QuadratureSpec, exponent: float) -> QuadratureSpec:
    # 支集球以原点为心时，局部半径即 r
    if u.support.center == 0.0:
        return spec.with_singularities(left=_origin_sigma(exponent))
    return spec


def dirichlet_energy(u: TestFunction, params: ProblemParams, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """∫|∇u|^p dx

    径向时为 ω_(N-1) ∫|u'|^p r^(N-1) dr；轴对称时被积函数为
    (|∂_r u|^2 + (r^(-1) ∂_θ u)^2)^(p/2)。
    """
    spec = spec or QuadratureSpec()
    N, p = params.N, params.p
    if isinstance(u, AxisymFunction):
        def integrand(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
            safe = np.where(r > 0, r, 1.0)
            angular = np.where(r > 0, u.grad_theta(r, theta) / safe, 0.0)
            return (u.grad_r(r, theta) ** 2 + angular**2) ** (p / 2.0)

        return integrate_axisym(integrand, N, _origin_spec(u, spec, 0.0), u.support)

    omega = sphere_area(N)
    spec = spec.with_singularities(left=_origin_sigma(p * u.slope_exponent + N - 1))
    return _integrate_on_support(
        lambda r: omega * np.abs(u.derivative(r)) ** p * r ** (N - 1), u.support, spec, u.breaks
    )


def _check_boundary_decay(u: TestFunction, params: ProblemParams) -> None:
    """a = 1 且 s < p 时，检查 |u|^(p*) V_a (R - r) 在 r → R 时趋于零"""
    if params.a < 1.0 or params.s >= params.p:
        return
    q, b, R = p_star(params), beta(params), params.R
    radii = np.array([R * (1.0 - 10.0 ** (-j)) for j in BOUNDARY_DECADES])
    if isinstance(u, AxisymFunction):
        thetas = np.linspace(0.0, math.pi, 9)
        rr, tt = np.meshgrid(radii, thetas, indexing="ij")
        values = np.max(np.abs(u(rr, tt)), axis=1)
    else:
        values = np.abs(u(radii))
    if not np.any(values > 0):
        return
    samples = values**q * _one_minus_a_rho(radii, params) ** (-b) * (R - radii)
    if not samples[-1] < samples[0]:
        raise DivergenceError(
            f"a = 1 时 ∫|u|^{q:g} V_a 在 r = R 处发散：u 在边界上衰减不够快（r → R 处的值 {samples[-1]:.3g}）"
        )


def weighted_norm(u: TestFunction, params: ProblemParams, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """∫_(B_R) |u|^(p*(s)) V_a dx；a = 0 时允许 R^N 上的函数

    Raises:
        ValueError: a > 0 而 u 的支集超出 B_R
        DivergenceError: a = 1、s < p 且 u 在 r = R 处衰减不够快
    """
    spec = spec_for_potential(params.a, spec)
    N, s = params.N, params.s
    q = p_star(params)
    if isinstance(u, AxisymFunction):
        outer = abs(u.support.center) + u.support.radius
        if outer > params.R * (1.0 + 1e-12):
            raise ValueError(f"u 的支集超出 B_R（R={params.R}）")
        _check_boundary_decay(u, params)

        def integrand(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
            return np.abs(u(r, theta)) ** q * potential_values(r, params)

        return integrate_axisym(integrand, N, _origin_spec(u, spec, -s), u.support)

    support = u.support
    if support > params.R:
        if params.a > 0:
            raise ValueError(f"a > 0 时 u 的支集必须在 B_R 内（R={params.R}）")
    _check_boundary_decay(u, params)
    omega = sphere_area(N)
    spec = spec.with_singularities(left=_origin_sigma(q * u.value_exponent + N - 1 - s))

    def radial(r: np.ndarray) -> np.ndarray:
        weight = r ** (N - 1) * potential_values(r, params) if params.a > 0 else r ** (N - 1 - s)
        return omega * np.abs(u(r)) ** q * weight

    return _integrate_on_support(radial, support, spec, u.breaks)


class QuotientReport(BaseModel):
    """一次 Rayleigh 商求值的全部数据，quotient = numerator / denominator^exponent"""

    numerator: float
    numerator_error: float
    denominator: float
    denominator_error: float
    exponent: float
    quotient: float
    quotient_error: float
    N: int
    p: float
    s: float
    R: float
    a: float
    function: str

    def recomputed(self) -> float:
        return self.numerator / self.denominator**self.exponent

    def flat(self) -> Dict[str, Any]:
        return self.model_dump()


def rayleigh_quotient(u: TestFunction, params: ProblemParams, spec: QuadratureSpec | None = None) -> QuotientReport:
    """∫|∇u|^p / (∫|u|^(p*) V_a)^(p/p*)，误差按一阶传播

    Raises:
        ValueError: 分母为零
        QuadratureError: 积分不收敛（含 DivergenceError）
    """
    numerator = dirichlet_energy(u, params, spec)
    denominator = weighted_norm(u, params, spec)
    if not denominator.value > 0:
        raise ValueError(f"分母为零：{u.name} 恒为零或支集为空")
    exponent = params.p / p_star(params)
    quotient = numerator.value / denominator.value**exponent
    relative = numerator.error / max(numerator.value, 1e-300) + exponent * denominator.error / denominator.value
    report = QuotientReport(
        numerator=numerator.value,
        numerator_error=numerator.error,
        denominator=denominator.value,
        denominator_error=denominator.error,
        exponent=exponent,
        quotient=quotient,
        quotient_error=quotient * relative,
        N=params.N,
        p=params.p,
        s=params.s,
        R=params.R,
        a=params.a,
        function=u.name,
    )
    logger.debug("quotient of %s at a=%g: %.10g ± %.2g", u.name, params.a, quotient, report.quotient_error)
    return report
