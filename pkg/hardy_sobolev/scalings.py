"""四种伸缩及其能量曲线

usual   u_λ(x) = λ^((N-p)/p) u(λx)
new     u^λ(r) = λ^((N-p)/p) u(r̃)，r̃ = λr[1 + a(λ^k - 1)(r/R)^k]^(-1/k)
scaleN  v_λ(x) = λ^(-(N-1)/N) v(y)，|y| = b^(1-λ)|x|^λ，p = N，单位球
scaleP  w_λ(x) = λ^((N-p)/p) w(y)，即 R = 1 的 new 伸缩

超出伸缩后支集的部分一律零延拓。
"""

import logging
import math
from typing import Callable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .funcspace import AxisymFunction, RadialFunction
from .functionals import dirichlet_energy
from .params import ProblemParams
from .parallel import parallel_map
from .quadrature import BallSupport, QuadratureSpec, integrate_axisym

logger = logging.getLogger(__name__)

SCALING_KINDS = ("usual", "new", "scaleN", "scaleP")


class ScalingSpec(BaseModel):
    """伸缩类型与参数

    Attributes:
        kind: usual | new | scaleN | scaleP
        lam: 伸缩参数 λ > 0
        a: new 与 scaleP 的势参数
        b: scaleN 的参数，b ≥ 1
        radius: usual 伸缩所在球的半径，R^N 上为 inf
    """

    model_config = ConfigDict(frozen=True)

    kind: str
    lam: float
    a: float = 0.0
    b: float = 1.0
    radius: float = math.inf

    @model_validator(mode="after")
    def _check_range(self) -> "ScalingSpec":
        if self.kind not in SCALING_KINDS:
            raise ValueError(f"不支持的伸缩类型：{self.kind}。支持：{', '.join(SCALING_KINDS)}")
        if not self.lam > 0:
            raise ValueError(f"λ 必须为正：{self.lam}")
        if not 0 <= self.a <= 1:
            raise ValueError(f"违反约束 0 ≤ a ≤ 1（a={self.a}）")
        if not self.b >= 1:
            raise ValueError(f"违反约束 b ≥ 1（b={self.b}）")
        if self.kind == "usual" and not math.isinf(self.radius) and self.lam < 1:
            raise ValueError(f"有界球上的 usual 伸缩要求 λ ≥ 1（λ={self.lam}）")
        if self.kind in ("new", "scaleP") and self.a < 1 and self.lam < 1:
            raise ValueError(f"a < 1 时 {self.kind} 伸缩要求 λ ≥ 1（λ={self.lam}）")
        if self.kind == "scaleN" and self.b > 1 and self.lam > 1:
            raise ValueError(f"b > 1 时 scaleN 伸缩要求 λ ≤ 1（λ={self.lam}）")
        return self


def scaled_radius(R: float, lam: float, a: float, k: float) -> float:
    """R̃ = R(λ^k(1-a) + a)^(-1/k)"""
    return R * (lam**k * (1.0 - a) + a) ** (-1.0 / k)


def _new_map(lam: float, a: float, k: float, R: float) -> Tuple[Callable, Callable, Callable]:
    """new 伸缩的 r ↦ r̃、导数 dr̃/dr 与逆映射"""
    c = a * (lam**k - 1.0)

    def forward(r: np.ndarray) -> np.ndarray:
        return lam * r * (1.0 + c * (r / R) ** k) ** (-1.0 / k)

    def slope(r: np.ndarray) -> np.ndarray:
        return lam * (1.0 + c * (r / R) ** k) ** (-(k + 1.0) / k)

    def inverse(rt: float) -> float:
        # r^(-k) = λ^k r̃^(-k) - c R^(-k)
        return (lam**k * rt ** (-k) - c * R ** (-k)) ** (-1.0 / k)

    return forward, slope, inverse


def _radial_scaled(
    u: RadialFunction,
    amplitude: float,
    forward: Callable,
    slope: Callable,
    support: float,
    breaks: Tuple[float, ...],
    name: str,
) -> RadialFunction:
    return RadialFunction(
        value=lambda r: amplitude * u(forward(r)),
        slope=lambda r: amplitude * u.derivative(forward(r)) * slope(r),
        support=support,
        name=name,
        breaks=breaks,
        value_exponent=u.value_exponent,
        slope_exponent=u.slope_exponent,
    )


def _axisym_scaled(
    u: AxisymFunction,
    amplitude: float,
    forward: Callable,
    slope: Callable,
    support: float,
    breaks: Tuple[float, ...],
    name: str,
) -> AxisymFunction:
    return AxisymFunction(
        value=lambda r, t: amplitude * u(forward(r), t),
        d_r=lambda r, t: amplitude * u.grad_r(forward(r), t) * slope(r),
        d_theta=lambda r, t: amplitude * u.grad_theta(forward(r), t),
        support=BallSupport(0.0, support, breaks),
        name=name,
        radial=u.radial,
    )


def apply_scaling(
    spec: ScalingSpec,
    u: RadialFunction | AxisymFunction,
    params: ProblemParams,
) -> RadialFunction | AxisymFunction:
    """按 spec 伸缩 u，支集外零延拓

    轴对称函数要求支集球以原点为心。new 伸缩用 params.R，scaleP 固定 R = 1。

    Raises:
        ValueError: 轴对称函数的支集不以原点为心
    """
    lam, N, p = spec.lam, params.N, params.p
    axisym = isinstance(u, AxisymFunction)
    if axisym and u.support.center != 0.0:
        raise ValueError("伸缩要求支集球以原点为心")
    edge = u.support.radius if axisym else u.support
    breaks = u.support.breaks if axisym else u.breaks
    name = f"{spec.kind}_{lam:g}[{u.name}]"

    if spec.kind == "usual":
        amplitude = lam ** ((N - p) / p)

        def forward(r):
            return lam * r

        def slope(r):
            return lam * np.ones_like(r)

        def inverse(x):
            return x / lam

    elif spec.kind in ("new", "scaleP"):
        R = params.R if spec.kind == "new" else 1.0
        k = params.k
        amplitude = lam ** ((N - p) / p)
        forward, slope, inverse = _new_map(lam, spec.a, k, R)
        if edge >= R:
            new_edge = scaled_radius(R, lam, spec.a, k)
        else:
            new_edge = inverse(edge)
        edge = None
    else:
        # scaleN 在 L^N 能量下考察，振幅 λ^(-(N-1)/N)
        b = spec.b
        amplitude = lam ** (-(N - 1.0) / N)

        def forward(r):
            return b ** (1.0 - lam) * r**lam

        def slope(r):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(r > 0, lam * forward(r) / np.where(r > 0, r, 1.0), 0.0)

        def inverse(x):
            return (x * b ** (lam - 1.0)) ** (1.0 / lam)

    if edge is not None:
        new_edge = math.inf if math.isinf(edge) else inverse(edge)
    if spec.kind == "scaleN":
        new_edge = min(new_edge, 1.0)
    new_breaks = tuple(float(inverse(x)) for x in breaks if x > 0)
    builder = _axisym_scaled if axisym else _radial_scaled
    return builder(u, amplitude, forward, slope, float(new_edge), new_breaks, name)


# ---------------------------------------------------------------- 能量曲线


class CurvePoint(BaseModel):
    lam: float
    energy: float
    error: float


def has_angular_content(v: AxisymFunction, tol: float = 1e-12) -> bool:
    """在支集内的采样点上 ∂_θ v 是否不恒为零"""
    edge = abs(v.support.center) + v.support.radius
    r = np.linspace(0.0, edge, 41)[1:-1]
    theta = np.linspace(0.0, math.pi, 41)[1:-1]
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    angular = np.abs(v.grad_theta(rr, tt))
    scale = max(float(np.max(np.abs(v(rr, tt)))), 1.0)
    return bool(np.max(angular) > tol * scale)


def _scale_n_integrand(v: AxisymFunction, lam: float, N: int) -> Callable:
    def integrand(t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        safe = np.where(t > 0, t, 1.0)
        angular = np.where(t > 0, v.grad_theta(t, theta) / (lam * safe), 0.0)
        return (v.grad_r(t, theta) ** 2 + angular**2) ** (N / 2.0)

    return integrand


def _scale_p_factor(t: np.ndarray, lam: float, a: float, k: float) -> np.ndarray:
    """f_λ(t) = 1 + a(λ^k - 1)/(λ^k(t^(-k) - a) + a)；λ = inf 时为 1 + a/(t^(-k) - a)"""
    with np.errstate(divide="ignore"):
        tk = np.where(t > 0, np.maximum(t, 1e-300) ** (-k), np.inf)
    if math.isinf(lam):
        return 1.0 + a / (tk - a)
    lk = lam**k
    return 1.0 + a * (lk - 1.0) / (lk * (tk - a) + a)


def _scale_p_integrand(w: AxisymFunction, lam: float, a: float, p: float, k: float) -> Callable:
    def integrand(t: np.ndarray, theta: np.ndarray) -> np.ndarray:
        safe = np.where(t > 0, t, 1.0)
        factor = _scale_p_factor(t, lam, a, k)
        angular = np.where(t > 0, w.grad_theta(t, theta) * factor / safe, 0.0)
        return (w.grad_r(t, theta) ** 2 + angular**2) ** (p / 2.0)

    return integrand


def _check_unit_ball(v: AxisymFunction) -> None:
    if abs(v.support.center) + v.support.radius > 1.0 + 1e-12:
        raise ValueError("scaleN 与 scaleP 只作用于单位球内有支集的函数")


def scaled_energy_curve(
    kind: str,
    u: AxisymFunction,
    params: ProblemParams,
    lam_grid: Sequence[float],
    spec: QuadratureSpec | None = None,
    a: float = 0.0,
    b: float = 1.0,
    threads: int | None = None,
) -> List[CurvePoint]:
    """沿 λ 网格的能量曲线

    scaleN 与 scaleP 直接积分变量替换后的 t 一侧被积函数：
    scaleN 为 (|∂_t v|^2 + (λt)^(-2)|∇_S v|^2)^(N/2)，与 b 无关；
    scaleP 为 (|∂_t w|^2 + t^(-2) f_λ(t)^2 |∇_S w|^2)^(p/2)。
    usual 与 new 对伸缩后的函数求 Dirichlet 能量。

    Raises:
        ValueError: λ 超出允许范围，或函数支集不在单位球内
    """
    spec = spec or QuadratureSpec()
    N, p = params.N, params.p
    for lam in lam_grid:
        ScalingSpec(kind=kind, lam=lam, a=a, b=b)

    if kind == "scaleN":
        _check_unit_ball(u)

        def evaluate(lam: float) -> CurvePoint:
            result = integrate_axisym(_scale_n_integrand(u, lam, N), N, spec, u.support)
            return CurvePoint(lam=lam, energy=result.value, error=result.error)

    elif kind == "scaleP":
        _check_unit_ball(u)
        k = params.k

        def evaluate(lam: float) -> CurvePoint:
            result = integrate_axisym(_scale_p_integrand(u, lam, a, p, k), N, spec, u.support)
            return CurvePoint(lam=lam, energy=result.value, error=result.error)

    else:

        def evaluate(lam: float) -> CurvePoint:
            scaled = apply_scaling(ScalingSpec(kind=kind, lam=lam, a=a), u, params)
            result = dirichlet_energy(scaled, params, spec)
            return CurvePoint(lam=lam, energy=result.value, error=result.error)

    curve = parallel_map(evaluate, list(lam_grid), threads)
    for point in curve:
        logger.info("%s energy at λ=%g: %.10g", kind, point.lam, point.energy)
    return curve


def scale_p_limit_energy(w: AxisymFunction, params: ProblemParams, a: float, spec: QuadratureSpec | None = None) -> float:
    """λ → ∞ 时 scaleP 能量的极限积分"""
    _check_unit_ball(w)
    result = integrate_axisym(_scale_p_integrand(w, math.inf, a, params.p, params.k), params.N, spec, w.support)
    return result.value


def limit_gap_curve(
    w: AxisymFunction,
    params: ProblemParams,
    lam_grid: Sequence[float],
    a: float,
    spec: QuadratureSpec | None = None,
    threads: int | None = None,
) -> List[CurvePoint]:
    """|E(λ) - E_∞| / E_∞，由单个差值被积函数直接积分

    返回点的 energy 字段存放相对差距。
    """
    spec = spec or QuadratureSpec()
    _check_unit_ball(w)
    for lam in lam_grid:
        ScalingSpec(kind="scaleP", lam=lam, a=a)
    N, p, k = params.N, params.p, params.k
    limit_fn = _scale_p_integrand(w, math.inf, a, p, k)
    limit = integrate_axisym(limit_fn, N, spec, w.support).value
    if limit == 0:
        raise ValueError("极限能量为零：w 恒为零")

    def evaluate(lam: float) -> CurvePoint:
        fn = _scale_p_integrand(w, lam, a, p, k)
        result = integrate_axisym(lambda t, th: fn(t, th) - limit_fn(t, th), N, spec, w.support)
        return CurvePoint(lam=lam, energy=abs(result.value) / limit, error=result.error / limit)

    return parallel_map(evaluate, list(lam_grid), threads)


def certify_unbounded(curve: Sequence[CurvePoint], v: AxisymFunction) -> bool:
    """scaleN 曲线沿递减 λ 严格递增且 ∇_S v 不恒为零"""
    if not has_angular_content(v):
        return False
    ordered = sorted(curve, key=lambda point: -point.lam)
    return all(b.energy > a.energy for a, b in zip(ordered, ordered[1:]))
