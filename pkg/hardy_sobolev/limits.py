"""维数 m → ∞ 的极限

c(m) = C_(m,p,0) (ω_(N-1)/ω_(m-1))^(p/m) ((N-p)/(m-p))^(p-p/m) 趋于 Hardy 常数
((N-p)/p)^p。所有 Γ 因子都在对数空间里求值，m 到 10^6 不溢出。
"""

import logging
import math
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel
from scipy import special

from .funcspace import RadialFunction
from .params import log_sobolev_constant
from .parallel import parallel_map
from .quadrature import QuadratureSpec, integrate_radial, integrate_tail, log_sphere_area
from .transforms import IdentityReport, make_map, verify_norm_identity

logger = logging.getLogger(__name__)


def log_omega(n: float) -> float:
    """log ω_(n-1) = log(n π^(n/2) / Γ(1 + n/2))"""
    return log_sphere_area(n)


def hardy_target(N: int, p: float) -> float:
    return ((N - p) / p) ** p


def c_of_m(m: float, N: int, p: float) -> float:
    """m 维 Sobolev 常数换算到 N 维后的前因子

    Raises:
        ValueError: 不满足 m > N > p > 1
    """
    if not 1 < p < N < m:
        raise ValueError(f"c(m) 要求 1 < p < N < m（N={N}, p={p}, m={m}）")
    log_c = (
        log_sobolev_constant(m, p)
        + (p / m) * (log_omega(N) - log_omega(m))
        + (p - p / m) * math.log((N - p) / (m - p))
    )
    return math.exp(log_c)


def stirling_ratio(t: float) -> float:
    """Γ(t) / (√(2π) t^(t-1/2) e^(-t))，约为 1 + 1/(12t)"""
    if not t > 0:
        raise ValueError(f"t 必须为正：{t}")
    log_stirling = 0.5 * math.log(2.0 * math.pi) + (t - 0.5) * math.log(t) - t
    return math.exp(float(special.gammaln(t)) - log_stirling)


class LimitCurve(BaseModel):
    """沿 m 网格的极限曲线

    Attributes:
        values: c(m)，或 weighted_limit_check 中的 L(m)
        target: 对应的极限值
        gaps: |values - target| / target
        energies: weighted_limit_check 时为 ∫|∇w|^p（每个 m 相同）
    """

    N: int
    p: float
    m: List[float]
    values: List[float]
    target: float
    gaps: List[float]
    energies: List[float] = []

    def eventually_decreasing(self, tail: int = 3) -> bool:
        gaps = self.gaps[-tail:]
        return all(b < a for a, b in zip(gaps, gaps[1:]))

    def rows(self) -> List[dict]:
        return [{"m": m, "c": c, "gap": g} for m, c, g in zip(self.m, self.values, self.gaps)]


def _gap(value: float, target: float) -> float:
    return abs(value - target) / target


def c_of_m_curve(N: int, p: float, m_grid: Sequence[float], threads: int | None = None) -> LimitCurve:
    target = hardy_target(N, p)
    values = parallel_map(lambda m: c_of_m(m, N, p), list(m_grid), threads)
    for m, c in zip(m_grid, values):
        logger.info("c(%g) = %.12g, gap %.3g", m, c, _gap(c, target))
    return LimitCurve(N=N, p=p, m=list(m_grid), values=values, target=target, gaps=[_gap(c, target) for c in values])


def _integrate(f, w: RadialFunction, spec: QuadratureSpec):
    if math.isinf(w.support):
        return integrate_tail(f, spec)
    return integrate_radial(f, spec, 0.0, w.support, w.breaks)


def weighted_limit_check(
    w: RadialFunction,
    m_grid: Sequence[float],
    N: int,
    p: float,
    spec: QuadratureSpec | None = None,
    threads: int | None = None,
) -> LimitCurve:
    """L(m) = c(m) (∫|w|^(mp/(m-p)) |y|^(-(m-N)p/(m-p)) dy)^((m-p)/m) 趋于 Hardy 形式

    目标为 ((N-p)/p)^p ∫|w|^p |y|^(-p) dy。w 恒为零时两侧都为 0，gap 记为 0。

    Raises:
        QuadratureError: 积分不收敛
    """
    spec = spec or QuadratureSpec()
    omega_n = math.exp(log_omega(N))
    energy = _integrate(lambda t: omega_n * np.abs(w.derivative(t)) ** p * t ** (N - 1), w, spec).value
    hardy = _integrate(lambda t: omega_n * np.abs(w(t)) ** p * t ** (N - 1 - p), w, spec).value
    target = hardy_target(N, p) * hardy

    def evaluate(m: float) -> float:
        q = m * p / (m - p)
        power = N - 1 - (m - N) * p / (m - p)
        norm = _integrate(lambda t: omega_n * np.abs(w(t)) ** q * t**power, w, spec).value
        return c_of_m(m, N, p) * norm ** ((m - p) / m) if norm > 0 else 0.0

    values = parallel_map(evaluate, list(m_grid), threads)
    gaps = [_gap(v, target) if target > 0 else 0.0 for v in values]
    for m, v, g in zip(m_grid, values, gaps):
        logger.info("L(%g) = %.10g (target %.10g, energy %.10g, gap %.3g)", m, v, target, energy, g)
    return LimitCurve(
        N=N, p=p, m=list(m_grid), values=values, target=target, gaps=gaps, energies=[energy] * len(values)
    )


def verify_S_another(
    m: float, N: int, p: float, w: RadialFunction, spec: QuadratureSpec | None = None
) -> List[IdentityReport]:
    """把 R^N 上的径向 w 搬到 m 维，检查梯度与范数两条恒等式"""
    tmap = make_map("dim", N, p, m=m)
    return [verify_norm_identity(tmap, w, identity, spec) for identity in ("gradient", "norm")]
