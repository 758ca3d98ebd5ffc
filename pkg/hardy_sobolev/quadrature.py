"""带端点奇性的确定性数值积分

复合 Gauss 规则建立在两端代数加密的面板网格上。声明了端点奇性时，
最外侧面板改用 Gauss–Jacobi 权重吸收 (r - lo)^(-σ) 或 (hi - r)^(-σ)。
误差估计取面板数加倍前后两次结果之差，直到满足相对容差。
所有规则只在开区间内部节点上求值。
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)

# 光滑被积函数的默认相对容差
DEFAULT_RTOL = 1e-9
# a > 0.9 时权函数接近奇异，放宽容差
NEAR_SINGULAR_RTOL = 1e-7
NEAR_SINGULAR_A = 0.9
MAX_LEFT_GRADING = 6.0
MAX_THETA_ORDER = 384

Integrand = Callable[[np.ndarray], np.ndarray]
AxisymIntegrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


class QuadratureError(RuntimeError):
    """积分在最大面板数内未收敛，或尾部被积函数不衰减"""


@dataclass(frozen=True)
class QuadratureSpec:
    """积分规则的全部可调参数

    Attributes:
        rtol: 相对容差，以 ∫|f| 为尺度
        max_panels: 每个区段允许的最大面板数
        grading_left: r = lo 端的加密指数
        grading_right: r = hi 端的加密指数
        order: 每个面板上的 Gauss 点数
        panels: 初始面板数
        singular_left: 声明的左端奇性阶 σ，f ~ (r - lo)^(-σ)
        singular_right: 声明的右端奇性阶 σ，f ~ (hi - r)^(-σ)
        theta_order: 极角方向的初始 Gauss 点数
    """

    rtol: float = DEFAULT_RTOL
    max_panels: int = 4096
    grading_left: float = 3.0
    grading_right: float = 3.0
    order: int = 16
    panels: int = 16
    singular_left: float = 0.0
    singular_right: float = 0.0
    theta_order: int = 24

    def __post_init__(self) -> None:
        if not self.rtol > 0:
            raise ValueError(f"容差必须为正：rtol={self.rtol}")
        if self.max_panels < 1 or self.panels < 1:
            raise ValueError("面板数必须至少为 1")
        if self.grading_left < 1 or self.grading_right < 1:
            raise ValueError("加密指数必须 ≥ 1")
        if self.order < 2 or self.theta_order < 2:
            raise ValueError("Gauss 阶数必须 ≥ 2")
        for side, sigma in (("左", self.singular_left), ("右", self.singular_right)):
            if not 0 <= sigma < 1:
                raise ValueError(f"{side}端奇性阶必须在 [0, 1) 内：{sigma}")

    def regraded(self) -> "QuadratureSpec":
        """换一套加密与阶数，用于两侧独立积分的恒等式校验"""
        return replace(
            self,
            grading_left=self.grading_left + 1.0,
            grading_right=self.grading_right + 1.0,
            order=self.order + 4,
            panels=self.panels + self.panels // 2,
        )

    def with_singularities(self, left: float = 0.0, right: float = 0.0) -> "QuadratureSpec":
        """声明端点奇性；左端加密指数同时提高到 max(2, 2/(1-σ))，上限 6

        右端不加密到更深处：hi 附近的节点必须与 hi 在浮点上可区分。
        """
        grading_left = self.grading_left
        if left > 0:
            grading_left = min(max(grading_left, 2.0, 2.0 / (1.0 - left)), MAX_LEFT_GRADING)
        return replace(
            self, singular_left=left, singular_right=right, grading_left=grading_left
        )


def spec_for_potential(a: float, base: QuadratureSpec | None = None) -> QuadratureSpec:
    """按势参数 a 选择容差"""
    base = base or QuadratureSpec()
    if a > NEAR_SINGULAR_A and base.rtol < NEAR_SINGULAR_RTOL:
        return replace(base, rtol=NEAR_SINGULAR_RTOL)
    return base


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    panels: int


@dataclass(frozen=True)
class BallSupport:
    """轴上一点为心的球形积分区域

    Attributes:
        center: 球心在对称轴上的坐标（原点为 0）
        radius: 球半径
        breaks: 局部半径上的折点（被积函数在此不光滑）
    """

    center: float = 0.0
    radius: float = 1.0
    breaks: Tuple[float, ...] = ()


def sphere_area(n: int | float) -> float:
    """单位球面 S^(n-1) ⊂ R^n 的面积 ω_(n-1)"""
    return math.exp(log_sphere_area(n))


def log_sphere_area(n: int | float) -> float:
    """log ω_(n-1) = log n + (n/2) log π - log Γ(1 + n/2)"""
    if n < 1:
        raise ValueError(f"维数必须 ≥ 1：{n}")
    return math.log(n) + 0.5 * n * math.log(math.pi) - float(special.gammaln(1.0 + 0.5 * n))


@lru_cache(maxsize=64)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(order)
    return x, w


@lru_cache(maxsize=64)
def _jacobi(order: int, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_jacobi(order, alpha, beta)
    return x, w


def graded_offsets(n: int, q_left: float, q_right: float) -> Tuple[np.ndarray, np.ndarray]:
    """[0, 1] 上 n 个面板的断点

    Returns:
        (left, right)：断点到 0 的距离与到 1 的距离，分别在各自一半内精确
    """
    xi = np.linspace(0.0, 1.0, n + 1)
    left_half = 0.5 * (2.0 * xi) ** q_left
    right_half = 0.5 * (2.0 * (1.0 - xi)) ** q_right
    left = np.where(xi <= 0.5, left_half, 1.0 - right_half)
    right = np.where(xi <= 0.5, 1.0 - left_half, right_half)
    return left, right


def _segment_rule(
    lo: float,
    hi: float,
    n: int,
    spec: QuadratureSpec,
    q_left: float,
    q_right: float,
    sigma_left: float,
    sigma_right: float,
) -> Tuple[np.ndarray, np.ndarray]:
    length = hi - lo
    left, right = graded_offsets(n, q_left, q_right)
    t, w = _legendre(spec.order)
    nodes = []
    weights = []
    for j in range(n):
        a_off, b_off = left[j], left[j + 1]
        a_dist, b_dist = right[j], right[j + 1]
        in_left_half = a_off + b_off <= 1.0
        width = (b_off - a_off if in_left_half else a_dist - b_dist) * length
        tt, ww = t, w
        scale = None
        if j == 0 and sigma_left > 0:
            tt, ww = _jacobi(spec.order, 0.0, -sigma_left)
            scale = (1.0 + tt) ** sigma_left
        elif j == n - 1 and sigma_right > 0:
            tt, ww = _jacobi(spec.order, -sigma_right, 0.0)
            scale = (1.0 - tt) ** sigma_right
        if in_left_half:
            x = lo + length * (a_off + (b_off - a_off) * 0.5 * (1.0 + tt))
        else:
            x = hi - length * (b_dist + (a_dist - b_dist) * 0.5 * (1.0 - tt))
        wx = 0.5 * width * ww
        if scale is not None:
            wx = wx * scale
        nodes.append(x)
        weights.append(wx)
    return np.concatenate(nodes), np.concatenate(weights)


def radial_rule(
    lo: float,
    hi: float,
    spec: QuadratureSpec,
    per_segment: int,
    breaks: Sequence[float] = (),
) -> Tuple[np.ndarray, np.ndarray]:
    """(lo, hi) 上的复合规则节点与权重

    有折点时按折点分段，每段 per_segment 个面板；只有最外两段向 lo、hi 加密，内部各段均匀。
    """
    if not hi > lo:
        raise ValueError(f"积分区间为空：({lo}, {hi})")
    cuts = [lo] + sorted({float(b) for b in breaks if lo < b < hi}) + [hi]
    segments = len(cuts) - 1
    nodes = []
    weights = []
    for i in range(segments):
        first = i == 0
        last = i == segments - 1
        x, w = _segment_rule(
            cuts[i],
            cuts[i + 1],
            per_segment,
            spec,
            spec.grading_left if first else 1.0,
            spec.grading_right if last else 1.0,
            spec.singular_left if first else 0.0,
            spec.singular_right if last else 0.0,
        )
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _segment_count(breaks: Sequence[float], lo: float, hi: float) -> int:
    return len({float(b) for b in breaks if lo < b < hi}) + 1


def _checked(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise QuadratureError("被积函数在积分节点上不是有限值")
    return values


def integrate_radial(
    f: Integrand,
    spec: QuadratureSpec | None = None,
    lo: float = 0.0,
    hi: float = 1.0,
    breaks: Sequence[float] = (),
) -> QuadratureResult:
    """计算 ∫_lo^hi f(r) dr

    Args:
        f: 向量化被积函数，端点处允许代数奇性
        spec: 积分规则参数
        lo, hi: 积分区间
        breaks: 被积函数的折点

    Returns:
        数值、误差估计与最终面板数

    Raises:
        QuadratureError: 在 max_panels 内未达到容差
    """
    spec = spec or QuadratureSpec()
    segments = _segment_count(breaks, lo, hi)
    per_segment = max(1, spec.panels // segments)
    previous = _radial_sum(f, lo, hi, spec, per_segment, breaks)
    while True:
        per_segment *= 2
        if per_segment > spec.max_panels:
            raise QuadratureError(
                f"积分在每段 {spec.max_panels} 个面板内未收敛（区间 ({lo}, {hi})，{segments} 段）"
            )
        current = _radial_sum(f, lo, hi, spec, per_segment, breaks)
        error = abs(current[0] - previous[0])
        if error <= spec.rtol * current[1]:
            panels = per_segment * segments
            logger.debug("radial quadrature converged: panels=%d value=%.12g", panels, current[0])
            return QuadratureResult(current[0], error, panels)
        previous = current


def _radial_sum(
    f: Integrand,
    lo: float,
    hi: float,
    spec: QuadratureSpec,
    per_segment: int,
    breaks: Sequence[float],
) -> Tuple[float, float]:
    nodes, weights = radial_rule(lo, hi, spec, per_segment, breaks)
    values = _checked(f(nodes))
    return float(np.sum(weights * values)), float(np.sum(weights * np.abs(values)))


def _decay_exponent(f: Integrand) -> float | None:
    """估计 f(t) ~ t^(-γ) 的 γ；指数衰减或恒为零时返回 None"""
    far = np.array([1e4, 1e6, 1e8])
    values = np.abs(_checked(f(far)))
    if np.all(values == 0):
        return None
    if values[1] == 0 or values[2] == 0:
        return None
    scaled = values * far
    if not scaled[2] < scaled[0]:
        raise QuadratureError("尾部被积函数不衰减（t·f(t) 不趋于零）")
    return float(-(math.log(values[2]) - math.log(values[1])) / math.log(100.0))


def integrate_tail(f: Integrand, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """计算 ∫_0^∞ f(t) dt

    代换 t = u / (1 - u) 映到 (0, 1)，再交给 integrate_radial。
    代数衰减 t^(-γ)（1 < γ < 2）在 u = 1 处产生 (1-u)^(γ-2) 型奇性，
    按探测到的 γ 自动声明右端奇性阶。

    Raises:
        QuadratureError: 被积函数不衰减或积分不收敛
    """
    spec = spec or QuadratureSpec()
    gamma = _decay_exponent(f)
    if gamma is not None and gamma < 2.0:
        sigma = min(2.0 - gamma, 0.95)
        # 略低于估计值，避免把可积奇性声明得过强
        spec = replace(spec, singular_right=max(0.0, math.floor(sigma * 100.0) / 100.0))

    def mapped(u: np.ndarray) -> np.ndarray:
        one_minus = 1.0 - u
        return f(u / one_minus) / (one_minus * one_minus)

    return integrate_radial(mapped, spec, 0.0, 1.0)


def integrate_axisym(
    g: AxisymIntegrand,
    N: int,
    spec: QuadratureSpec | None = None,
    support: BallSupport | None = None,
) -> QuadratureResult:
    """轴对称被积函数在球上的积分 ∫ g(r, θ) dx

    在以 support.center 为心的局部极坐标 (ρ, φ) 中做张量积规则：
    ρ 方向为 radial_rule，φ 方向为 [0, π] 上带权 sin^(N-2) φ 的 Gauss 规则，
    再乘 ω_(N-2)。g 接收全局极坐标 (r, θ)。

    Args:
        g: 向量化被积函数 g(r, θ)
        N: 空间维数
        spec: 积分规则参数
        support: 积分球，默认是以原点为心的单位球
    """
    spec = spec or QuadratureSpec()
    support = support or BallSupport()
    if N < 2:
        raise ValueError(f"轴对称积分要求 N ≥ 2：{N}")
    angular = sphere_area(N - 1)
    theta_order = spec.theta_order
    segments = _segment_count(support.breaks, 0.0, support.radius)
    per_segment = max(1, spec.panels // segments)
    previous = _axisym_sum(g, N, spec, support, per_segment, theta_order, angular)
    while True:
        per_segment *= 2
        theta_order = min(2 * theta_order, MAX_THETA_ORDER)
        if per_segment > spec.max_panels:
            raise QuadratureError(f"轴对称积分在每段 {spec.max_panels} 个面板内未收敛")
        current = _axisym_sum(g, N, spec, support, per_segment, theta_order, angular)
        error = abs(current[0] - previous[0])
        if error <= spec.rtol * current[1]:
            return QuadratureResult(current[0], error, per_segment * segments)
        previous = current


def _axisym_sum(
    g: AxisymIntegrand,
    N: int,
    spec: QuadratureSpec,
    support: BallSupport,
    per_segment: int,
    theta_order: int,
    angular: float,
) -> Tuple[float, float]:
    rho, w_rho = radial_rule(0.0, support.radius, spec, per_segment, support.breaks)
    t, w_t = _legendre(theta_order)
    phi = 0.5 * math.pi * (1.0 + t)
    w_phi = 0.5 * math.pi * w_t * np.sin(phi) ** (N - 2)
    rho_grid, phi_grid = np.meshgrid(rho, phi, indexing="ij")
    axis = support.center + rho_grid * np.cos(phi_grid)
    perp = rho_grid * np.sin(phi_grid)
    r = np.hypot(axis, perp)
    theta = np.arctan2(perp, axis)
    values = _checked(g(r, theta))
    weights = angular * np.outer(w_rho * rho ** (N - 1), w_phi)
    return float(np.sum(weights * values)), float(np.sum(weights * np.abs(values)))
