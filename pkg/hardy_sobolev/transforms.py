"""径向变量替换及其范数恒等式

四种映射 r ↦ t：
    ioku  t^(-k) = r^(-k) - R^(-k) + T^(-k)，B_R → B_T
    hk    t^(-k) = log(R/r)，B_R → R^N
    st    t^(-j) = log(R/r)，j = (m-N)/(N-1)，p = N，B_R^N → R^m
    dim   t^(-k) = r^(-(m-p)/(p-1))，R^m → R^N
其中 k = (N-p)/(p-1)。u 记 r 一侧的函数，w 记 t 一侧的函数，u(r) = w(t(r))。
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Tuple

import numpy as np
from pydantic import BaseModel

from .funcspace import AxisymFunction, RadialFunction
from .functionals import DivergenceError
from .params import ProblemParams, beta, validate
from .quadrature import (
    BallSupport,
    QuadratureResult,
    QuadratureSpec,
    integrate_axisym,
    integrate_radial,
    integrate_tail,
    sphere_area,
)

logger = logging.getLogger(__name__)

MAP_KINDS = ("ioku", "hk", "st", "dim")
IDENTITIES = ("gradient", "norm")


@dataclass(frozen=True)
class TransformMap:
    """径向变量替换

    Attributes:
        kind: ioku | hk | st | dim
        N: r 一侧（dim 时为 t 一侧）的维数
        p: 指数；st 要求 p = N
        R: 内球半径（dim 不用）
        T: ioku 的外半径，可为 inf
        m: st 与 dim 的另一维数
    """

    kind: str
    N: int
    p: float
    R: float = 1.0
    T: float = math.inf
    m: int | None = None

    @property
    def k(self) -> float:
        return (self.N - self.p) / (self.p - 1.0)

    @property
    def j(self) -> float:
        return (self.m - self.N) / (self.N - 1.0)

    @property
    def a(self) -> float:
        """ioku 映射对应的势参数 1 - (R/T)^k"""
        if math.isinf(self.T):
            return 1.0
        return 1.0 - (self.R / self.T) ** self.k

    @property
    def exponent(self) -> float:
        """dim 映射 t = r^e 中的 e"""
        return (self.m - self.p) / (self.N - self.p)

    @property
    def inner_dim(self) -> int:
        return self.m if self.kind == "dim" else self.N

    @property
    def outer_dim(self) -> int:
        return self.m if self.kind == "st" else self.N

    @property
    def inner_radius(self) -> float:
        return math.inf if self.kind == "dim" else self.R

    @property
    def outer_radius(self) -> float:
        return self.T if self.kind == "ioku" else math.inf

    def _check(self, x: np.ndarray, upper: float, label: str) -> None:
        if np.any(x < 0) or np.any(x >= upper):
            raise ValueError(f"{self.kind} 映射的{label}必须在 [0, {upper:g}) 内")

    def forward(self, r: object) -> np.ndarray:
        """r ↦ t"""
        r = np.asarray(r, dtype=float)
        self._check(r, self.inner_radius, "半径 r")
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind == "ioku":
                # t^(-k) R^k = (R/r)^k - a
                gap = np.expm1(self.k * np.log(self.R / r)) + (1.0 - self.a)
                return self.R * gap ** (-1.0 / self.k)
            if self.kind in ("hk", "st"):
                power = self.k if self.kind == "hk" else self.j
                log_ratio = -np.log1p(-(self.R - r) / self.R)
                return np.where(r > 0, log_ratio ** (-1.0 / power), 0.0)
            return r**self.exponent

    def inverse(self, t: object) -> np.ndarray:
        """t ↦ r"""
        t = np.asarray(t, dtype=float)
        self._check(t, self.outer_radius, "半径 t")
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind == "ioku":
                return self.R * ((self.R / t) ** self.k + self.a) ** (-1.0 / self.k)
            if self.kind in ("hk", "st"):
                power = self.k if self.kind == "hk" else self.j
                return self.R * np.exp(-(t ** (-power)))
            return t ** (1.0 / self.exponent)

    def jacobian(self, r: object) -> np.ndarray:
        """dr/dt，以 r 为自变量"""
        r = np.asarray(r, dtype=float)
        self._check(r, self.inner_radius, "半径 r")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "ioku":
                # (r/t)^k = 1 - a (r/R)^k，写成 (1-a) + a(1 - (r/R)^k)
                one_minus_rho = np.where(r > 0, -np.expm1(self.k * np.log(r / self.R)), 1.0)
                ratio_k = (1.0 - self.a) + self.a * one_minus_rho
                return ratio_k ** ((self.N - 1.0) / (self.N - self.p))
            if self.kind in ("hk", "st"):
                power = self.k if self.kind == "hk" else self.j
                t = self.forward(r)
                return np.where(r > 0, r * power * t ** (-power - 1.0), 0.0)
            e = self.exponent
            return r ** (1.0 - e) / e


def make_map(
    kind: str,
    N: int,
    p: float,
    R: float = 1.0,
    T: float = math.inf,
    m: int | None = None,
) -> TransformMap:
    """校验参数后构造映射

    Raises:
        ValueError: 未知类型，或参数不满足该类型的约束
    """
    if kind not in MAP_KINDS:
        raise ValueError(f"不支持的映射类型：{kind}。支持：{', '.join(MAP_KINDS)}")
    if N < 2:
        raise ValueError(f"违反约束 N ≥ 2（N={N}）")
    if not R > 0 or math.isinf(R):
        raise ValueError(f"违反约束 0 < R < ∞（R={R}）")
    if kind == "st":
        if p != N:
            raise ValueError(f"st 映射只用于 p = N（N={N}, p={p}）")
        if m is None or int(m) != m or not m > N:
            raise ValueError(f"st 映射要求整数 m > N（m={m}）")
        return TransformMap(kind, N, float(p), R, math.inf, int(m))
    if not 1 < p < N:
        raise ValueError(f"违反约束 1 < p < N（N={N}, p={p}）")
    if kind == "ioku":
        if not T >= R:
            raise ValueError(f"违反约束 T ≥ R（T={T}, R={R}）")
        return TransformMap(kind, N, float(p), R, T)
    if kind == "dim":
        if m is None or not m > N:
            raise ValueError(f"dim 映射要求 m > N（m={m}）")
        return TransformMap(kind, N, float(p), R, math.inf, m)
    return TransformMap(kind, N, float(p), R)


def pushforward(tmap: TransformMap, w: RadialFunction) -> RadialFunction:
    """由 t 一侧的 w 得 r 一侧的 u(r) = w(t(r))，u' = w'(t) / (dr/dt)"""
    support = tmap.inner_radius
    if not math.isinf(w.support) and w.support < tmap.outer_radius:
        support = float(tmap.inverse(w.support))
    breaks = tuple(float(tmap.inverse(b)) for b in w.breaks if 0 < b < tmap.outer_radius)

    def value(r: np.ndarray) -> np.ndarray:
        return w(tmap.forward(r))

    def slope(r: np.ndarray) -> np.ndarray:
        jac = tmap.jacobian(r)
        return np.where(jac > 0, w.derivative(tmap.forward(r)) / np.where(jac > 0, jac, 1.0), 0.0)

    return RadialFunction(value, slope, support=support, name=f"{tmap.kind}*[{w.name}]", breaks=breaks)


def pullback(tmap: TransformMap, u: RadialFunction) -> RadialFunction:
    """由 r 一侧的 u 得 t 一侧的 w(t) = u(r(t))，w' = u'(r) · dr/dt"""
    support = tmap.outer_radius
    if not math.isinf(u.support) and u.support < tmap.inner_radius:
        support = float(tmap.forward(u.support))
    breaks = tuple(float(tmap.forward(b)) for b in u.breaks if 0 < b < tmap.inner_radius)

    def value(t: np.ndarray) -> np.ndarray:
        return u(tmap.inverse(t))

    def slope(t: np.ndarray) -> np.ndarray:
        r = tmap.inverse(t)
        # 远端的 t 可能被舍入到 r = R
        inside = r < min(u.support, tmap.inner_radius)
        return np.where(inside, u.derivative(r) * tmap.jacobian(np.where(inside, r, 0.0)), 0.0)

    return RadialFunction(value, slope, support=support, name=f"{tmap.kind}^*[{u.name}]", breaks=breaks)


def pushforward_axisym(tmap: TransformMap, w: AxisymFunction) -> AxisymFunction:
    """ioku 映射下的轴对称版本：u(r, θ) = w(t(r), θ)，角向变量不变"""
    if tmap.kind != "ioku":
        raise ValueError("轴对称变换只对 ioku 映射定义")
    if w.support.center != 0.0:
        raise ValueError("轴对称变换要求支集球以原点为心")
    if not w.support.radius <= tmap.T:
        raise ValueError(f"w 的支集超出 B_T（T={tmap.T}）")
    edge = tmap.R if w.support.radius >= tmap.T else float(tmap.inverse(w.support.radius))
    breaks = tuple(float(tmap.inverse(b)) for b in w.support.breaks if 0 < b < tmap.T)

    def value(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return w(tmap.forward(r), theta)

    def d_r(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return w.grad_r(tmap.forward(r), theta) / tmap.jacobian(r)

    def d_theta(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return w.grad_theta(tmap.forward(r), theta)

    return AxisymFunction(
        value=value,
        d_r=d_r,
        d_theta=d_theta,
        support=BallSupport(0.0, edge, breaks),
        name=f"ioku*[{w.name}]",
        radial=w.radial,
    )


def gamma_alpha(m: int, N: int, alpha: float) -> float:
    """st 范数恒等式中的对数权指数 ((m-1)N - (N-1)α)/(m-N)"""
    return ((m - 1) * N - (N - 1) * alpha) / (m - N)


# ---------------------------------------------------------------- 恒等式校验


class IdentityReport(BaseModel):
    """一条恒等式两侧的数值与相对残差"""

    kind: str
    identity: str
    lhs: float
    lhs_error: float
    rhs: float
    rhs_error: float
    prefactor: float
    residual: float
    function: str


def relative_residual(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0 else abs(lhs - rhs) / scale


def _radial_integral(
    f: Callable[[np.ndarray], np.ndarray],
    support: float,
    spec: QuadratureSpec,
    breaks: Tuple[float, ...] = (),
) -> QuadratureResult:
    if math.isinf(support):
        return integrate_tail(f, spec)
    return integrate_radial(f, spec, 0.0, support, breaks)


def _log_variable_integral(
    u: RadialFunction, R: float, q: float, exponent: float, spec: QuadratureSpec
) -> QuadratureResult:
    """∫_(B_R) |u|^q |x|^(-N) (log R/|x|)^(-γ) dx / ω，用 L = log(R/r) 作积分变量"""

    def integrand(L: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.abs(u(R * np.exp(-L))) ** q * L ** (-exponent)

    return integrate_tail(integrand, spec)


def _zero_report(tmap: TransformMap, identity: str, prefactor: float, name: str) -> IdentityReport:
    return IdentityReport(
        kind=tmap.kind,
        identity=identity,
        lhs=0.0,
        lhs_error=0.0,
        rhs=0.0,
        rhs_error=0.0,
        prefactor=prefactor,
        residual=0.0,
        function=name,
    )


def identity_prefactor(tmap: TransformMap, identity: str) -> float:
    """lhs = prefactor × rhs 中的常数

    ioku 为 1；hk 的梯度恒等式带 k^(p-1)，范数恒等式带 (p-1)/(N-p)；
    st 的梯度恒等式带 (ω_(m-1)/ω_(N-1)) j^(N-1)，范数恒等式带
    ω_(m-1)(N-1) / (ω_(N-1)(m-N))；dim 的两式分别带
    (ω_(m-1)/ω_(N-1))((m-p)/(N-p))^(p-1) 与 (ω_(m-1)/ω_(N-1))(N-p)/(m-p)。
    """
    if identity not in IDENTITIES:
        raise ValueError(f"不支持的恒等式：{identity}。支持：{', '.join(IDENTITIES)}")
    N, p = tmap.N, tmap.p
    if tmap.kind == "ioku":
        return 1.0
    if tmap.kind == "hk":
        return tmap.k ** (p - 1.0) if identity == "gradient" else 1.0 / tmap.k
    ratio = sphere_area(tmap.m) / sphere_area(N)
    if tmap.kind == "st":
        return ratio * tmap.j ** (N - 1.0) if identity == "gradient" else ratio / tmap.j
    m = tmap.m
    if identity == "gradient":
        return ratio * ((m - p) / (N - p)) ** (p - 1.0)
    return ratio * (N - p) / (m - p)


def verify_norm_identity(
    tmap: TransformMap,
    testfn: RadialFunction,
    identity: str = "gradient",
    spec: QuadratureSpec | None = None,
    weight: float = 0.0,
    q: float | None = None,
) -> IdentityReport:
    """用两套独立网格分别计算恒等式两侧

    testfn 对 ioku/hk/st 是 r 一侧的 u（零迹），对 dim 是 R^N 上的 w。
    lhs 恒为 t 一侧（dim 时为 R^m 一侧）的积分，rhs 含印出的常数因子。

    Args:
        weight: 范数恒等式的权指数，ioku/hk 为 s，st 为 α
        q: 范数恒等式的幂次；ioku 固定为 p*(s)，dim 固定为 mp/(m-p)

    Raises:
        QuadratureError: 任一侧积分不收敛
    """
    spec = spec or QuadratureSpec()
    other = spec.regraded()
    prefactor = identity_prefactor(tmap, identity)
    N, p = tmap.N, tmap.p
    if tmap.kind == "dim":
        lhs, rhs = _dim_sides(tmap, testfn, identity, spec, other)
    else:
        lhs, rhs = _ball_sides(tmap, testfn, identity, spec, other, weight, q)
    if lhs is None:
        return _zero_report(tmap, identity, prefactor, testfn.name)
    rhs_value = prefactor * rhs.value
    report = IdentityReport(
        kind=tmap.kind,
        identity=identity,
        lhs=lhs.value,
        lhs_error=lhs.error,
        rhs=rhs_value,
        rhs_error=prefactor * rhs.error,
        prefactor=prefactor,
        residual=relative_residual(lhs.value, rhs_value),
        function=testfn.name,
    )
    logger.info(
        "identity %s/%s on %s: lhs=%.12g rhs=%.12g residual=%.3g (N=%d, p=%g)",
        tmap.kind, identity, testfn.name, report.lhs, report.rhs, report.residual, N, p,
    )
    return report


def _is_zero(fn: RadialFunction) -> bool:
    samples = np.linspace(0.0, 1.0, 17)[1:-1]
    edge = fn.support if not math.isinf(fn.support) else 10.0
    return bool(np.all(fn(samples * edge) == 0) and np.all(fn.derivative(samples * edge) == 0))


def _ball_sides(
    tmap: TransformMap,
    u: RadialFunction,
    identity: str,
    spec: QuadratureSpec,
    other: QuadratureSpec,
    weight: float,
    q: float | None,
) -> Tuple[QuadratureResult | None, QuadratureResult | None]:
    if _is_zero(u):
        return None, None
    N, p, R = tmap.N, tmap.p, tmap.R
    w = pullback(tmap, u)
    dim_t = tmap.outer_dim
    omega_r, omega_t = sphere_area(N), sphere_area(dim_t)
    breaks_t = w.breaks

    if identity == "gradient":
        lhs = _radial_integral(
            lambda t: omega_t * np.abs(w.derivative(t)) ** p * t ** (dim_t - 1), w.support, spec, breaks_t
        )
        power = p - 1.0 if tmap.kind == "hk" else N - 1.0
        rhs = integrate_radial(
            lambda r: omega_r * np.abs(u.derivative(r)) ** p * r**power, other, 0.0, u.support, u.breaks
        )
        return lhs, rhs

    # t^(dim-1-weight) 在原点可能奇异
    spec = spec.with_singularities(left=max(0.0, weight - (dim_t - 1)))
    other = other.with_singularities(left=max(0.0, weight - (N - 1)))
    if tmap.kind == "ioku":
        params = validate({"N": N, "p": p, "s": weight, "R": R, "a": tmap.a})
        exponent = p * (N - weight) / (N - p)
        if q is not None and q != exponent:
            raise ValueError(f"ioku 范数恒等式的幂次固定为 p*(s) = {exponent:g}")
        q = exponent
        b = beta(params)

        def weighted_u(r: np.ndarray) -> np.ndarray:
            one_minus = (1.0 - params.a) + params.a * np.where(
                r > 0, -np.expm1(tmap.k * np.log(r / R)), 1.0
            )
            return omega_r * np.abs(u(r)) ** q * r ** (N - 1 - weight) * one_minus ** (-b)

        lhs = _radial_integral(
            lambda t: omega_t * np.abs(w(t)) ** q * t ** (N - 1 - weight), w.support, spec, breaks_t
        )
        rhs = integrate_radial(weighted_u, other, 0.0, u.support, u.breaks)
        return lhs, rhs

    if tmap.kind == "hk":
        params = validate({"N": N, "p": p, "s": weight, "R": R})
        q = q if q is not None else p * (N - weight) / (N - p)
        log_exponent = beta(params)
    else:
        power = tmap.j
        q = q if q is not None else 2.0 * (tmap.m - weight) / power
        log_exponent = gamma_alpha(tmap.m, N, weight)
    if not q > 0:
        raise ValueError(f"幂次 q 必须为正：{q}")
    lhs = _radial_integral(
        lambda t: omega_t * np.abs(w(t)) ** q * t ** (dim_t - 1 - weight), w.support, spec, breaks_t
    )
    inner = _log_variable_integral(u, R, q, log_exponent, replace(other, singular_left=0.0))
    rhs = QuadratureResult(omega_r * inner.value, omega_r * inner.error, inner.panels)
    return lhs, rhs


def _dim_sides(
    tmap: TransformMap,
    w: RadialFunction,
    identity: str,
    spec: QuadratureSpec,
    other: QuadratureSpec,
) -> Tuple[QuadratureResult | None, QuadratureResult | None]:
    if _is_zero(w):
        return None, None
    N, p, m = tmap.N, tmap.p, tmap.m
    u = pushforward(tmap, w)
    omega_m, omega_n = sphere_area(m), sphere_area(N)
    if identity == "gradient":
        lhs = _radial_integral(
            lambda r: omega_m * np.abs(u.derivative(r)) ** p * r ** (m - 1), u.support, spec, u.breaks
        )
        rhs = _radial_integral(
            lambda t: omega_n * np.abs(w.derivative(t)) ** p * t ** (N - 1), w.support, other, w.breaks
        )
        return lhs, rhs
    q = m * p / (m - p)
    power = N - 1 - (m - N) * p / (m - p)
    other = other.with_singularities(left=max(0.0, -power))
    lhs = _radial_integral(lambda r: omega_m * np.abs(u(r)) ** q * r ** (m - 1), u.support, spec, u.breaks)
    rhs = _radial_integral(lambda t: omega_n * np.abs(w(t)) ** q * t**power, w.support, other, w.breaks)
    return lhs, rhs


# ---------------------------------------------------------------- L_p 能量


def _operator_integrand(u: AxisymFunction, params: ProblemParams) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    R, k, a, p = params.R, params.k, params.a, params.p

    def integrand(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        one_minus_rho = np.where(r > 0, -np.expm1(k * np.log(np.maximum(r, 1e-300) / R)), 1.0)
        factor = 1.0 / ((1.0 - a) + a * one_minus_rho)
        safe_r = np.where(r > 0, r, 1.0)
        angular = np.where(r > 0, u.grad_theta(r, theta) / safe_r, 0.0) * factor
        return (u.grad_r(r, theta) ** 2 + angular**2) ** (p / 2.0)

    return integrand


def _check_angular_boundary(u: AxisymFunction, params: ProblemParams) -> None:
    """a = 1 时检查 |∂_θ u| / (r(1 - (r/R)^k)) 在 r → R 时是否有界"""
    outer = abs(u.support.center) + u.support.radius
    if params.a < 1.0 or u.radial or outer < params.R * (1.0 - 1e-12):
        return
    theta = np.linspace(0.0, math.pi, 33)[1:-1]
    levels = []
    for j in range(3, 7):
        r = params.R * (1.0 - 10.0 ** (-j))
        one_minus_rho = -math.expm1(params.k * math.log(r / params.R))
        levels.append(float(np.max(np.abs(u.grad_theta(np.full_like(theta, r), theta)))) / (r * one_minus_rho))
    if levels[-1] > 10.0 * max(levels[0], 1e-300):
        raise DivergenceError("a = 1 时角向项在 r = R 处不可积：L_p 能量发散")


def lp_operator_energy(u: AxisymFunction, params: ProblemParams, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """∫_(B_R) |L_p u|^p dx

    轴对称时被积函数为 (|∂_r u|^2 + (r^(-1) ∂_θ u [1 - a(r/R)^k]^(-1))^2)^(p/2)。

    Raises:
        DivergenceError: a = 1 且角向项在 r = R 处不可积
    """
    spec = spec or QuadratureSpec()
    _check_angular_boundary(u, params)
    return integrate_axisym(_operator_integrand(u, params), params.N, spec, u.support)


def verify_operator_identity(
    tmap: TransformMap, w: AxisymFunction, spec: QuadratureSpec | None = None
) -> IdentityReport:
    """∫_(B_T) |∇w|^p dy = ∫_(B_R) |L_p u|^p dx，u 为 w 经 ioku 映射的拉回"""
    spec = spec or QuadratureSpec()
    u = pushforward_axisym(tmap, w)
    params = validate({"N": tmap.N, "p": tmap.p, "R": tmap.R, "a": tmap.a})
    p = tmap.p

    def energy(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        safe_r = np.where(r > 0, r, 1.0)
        angular = np.where(r > 0, w.grad_theta(r, theta) / safe_r, 0.0)
        return (w.grad_r(r, theta) ** 2 + angular**2) ** (p / 2.0)

    lhs = integrate_axisym(energy, tmap.N, spec, w.support)
    rhs = lp_operator_energy(u, params, spec.regraded())
    return IdentityReport(
        kind=tmap.kind,
        identity="operator",
        lhs=lhs.value,
        lhs_error=lhs.error,
        rhs=rhs.value,
        rhs_error=rhs.error,
        prefactor=1.0,
        residual=relative_residual(lhs.value, rhs.value),
        function=w.name,
    )
