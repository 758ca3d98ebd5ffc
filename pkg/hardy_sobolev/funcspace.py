"""径向与轴对称试验函数

包括：闭式族与网格函数两种径向表示、轴对称函数、极值族 W_λ 与 U^λ、
边界凸包试验函数、试验函数族，以及球面平均算子。
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import interpolate

from .params import ProblemParams
from .quadrature import BallSupport, _legendre, sphere_area

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]
AxisymFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

SPHERICAL_AVERAGE_ORDER = 96
MIN_CONCENTRATION = 0.005


def _masked(fn: ArrayFn, r: np.ndarray, inside: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r, dtype=float)
    if np.any(inside):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out[inside] = fn(r[inside])
    return out


@dataclass(frozen=True)
class RadialFunction:
    """径向函数 u(r)，支集 [0, support) 之外为零

    Attributes:
        value: u 的向量化求值
        slope: u' 的向量化求值
        support: 支集外半径，整个空间时为 inf
        name: 描述
        breaks: u' 的间断点
        value_exponent: 原点附近 u ~ r^e0
        slope_exponent: 原点附近 u' ~ r^e1
    """

    value: ArrayFn
    slope: ArrayFn
    support: float = math.inf
    name: str = ""
    breaks: Tuple[float, ...] = ()
    value_exponent: float = 0.0
    slope_exponent: float = 0.0

    def __call__(self, r: Any) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return _masked(self.value, r, r < self.support)

    def derivative(self, r: Any) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return _masked(self.slope, r, r < self.support)

    def scaled(self, c: float) -> "RadialFunction":
        value, slope = self.value, self.slope
        return replace(
            self,
            value=lambda r: c * value(r),
            slope=lambda r: c * slope(r),
            name=f"{c:g}*{self.name}",
        )


@dataclass(frozen=True)
class AxisymFunction:
    """轴对称函数 u(r, θ)，θ 为与对称轴的夹角

    支集为 support 描述的球（球心在轴上），球外为零。
    d_theta 是 ∂u/∂θ，角向梯度的模为 |∂_θ u| / r。
    """

    value: AxisymFn
    d_r: AxisymFn
    d_theta: AxisymFn
    support: BallSupport
    name: str = ""
    radial: bool = False

    def _inside(self, r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        c = self.support.center
        rho_sq = r * r + c * c - 2.0 * r * c * np.cos(theta)
        return rho_sq < self.support.radius**2

    def _eval(self, fn: AxisymFn, r: Any, theta: Any) -> np.ndarray:
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        inside = self._inside(r, theta)
        out = np.zeros(r.shape, dtype=float)
        if np.any(inside):
            with np.errstate(divide="ignore", invalid="ignore"):
                out[inside] = fn(r[inside], theta[inside])
        return out

    def __call__(self, r: Any, theta: Any) -> np.ndarray:
        return self._eval(self.value, r, theta)

    def grad_r(self, r: Any, theta: Any) -> np.ndarray:
        return self._eval(self.d_r, r, theta)

    def grad_theta(self, r: Any, theta: Any) -> np.ndarray:
        return self._eval(self.d_theta, r, theta)

    def scaled(self, c: float) -> "AxisymFunction":
        value, d_r, d_theta = self.value, self.d_r, self.d_theta
        return replace(
            self,
            value=lambda r, t: c * value(r, t),
            d_r=lambda r, t: c * d_r(r, t),
            d_theta=lambda r, t: c * d_theta(r, t),
            name=f"{c:g}*{self.name}",
        )


def as_axisym(u: RadialFunction) -> AxisymFunction:
    """把有界支集的径向函数看作轴对称函数"""
    if math.isinf(u.support):
        raise ValueError("支集无界的径向函数不能转成球上的轴对称函数")
    return AxisymFunction(
        value=lambda r, t: u.value(r),
        d_r=lambda r, t: u.slope(r),
        d_theta=lambda r, t: np.zeros_like(r),
        support=BallSupport(0.0, u.support, u.breaks),
        name=u.name,
        radial=True,
    )


def separable(
    g: ArrayFn,
    dg: ArrayFn,
    h: ArrayFn,
    dh: ArrayFn,
    radius: float,
    name: str = "",
) -> AxisymFunction:
    """w(r, θ) = g(r) h(θ)，支集为以原点为心、半径 radius 的球"""
    return AxisymFunction(
        value=lambda r, t: g(r) * h(t),
        d_r=lambda r, t: dg(r) * h(t),
        d_theta=lambda r, t: g(r) * dh(t),
        support=BallSupport(0.0, radius),
        name=name,
        radial=False,
    )


# ---------------------------------------------------------------- 极值族


def _require_subcritical(params: ProblemParams) -> None:
    if params.s >= params.p:
        raise ValueError(f"极值族要求 s < p（s={params.s}, p={params.p}），s = p 时退化")


def _w_exponents(params: ProblemParams) -> Tuple[float, float, float]:
    N, p, s = params.N, params.p, params.s
    return (N - p) / p, (p - s) / (p - 1.0), (N - p) / (p - s)


def eval_W(lam: float, t: Any, params: ProblemParams) -> np.ndarray:
    """W_λ(t) = λ^((N-p)/p) (1 + (λt)^((p-s)/(p-1)))^(-(N-p)/(p-s))"""
    _require_subcritical(params)
    if not lam > 0:
        raise ValueError(f"λ 必须为正：{lam}")
    e, sigma, d = _w_exponents(params)
    t = np.asarray(t, dtype=float)
    return lam**e * (1.0 + (lam * t) ** sigma) ** (-d)


def eval_W_slope(lam: float, t: Any, params: ProblemParams) -> np.ndarray:
    _require_subcritical(params)
    e, sigma, d = _w_exponents(params)
    x = lam * np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return -(lam ** (e + 1.0)) * d * sigma * x ** (sigma - 1.0) * (1.0 + x**sigma) ** (-d - 1.0)


def W_family(lam: float, params: ProblemParams) -> RadialFunction:
    _require_subcritical(params)
    _, sigma, _ = _w_exponents(params)
    return RadialFunction(
        value=lambda t: eval_W(lam, t, params),
        slope=lambda t: eval_W_slope(lam, t, params),
        support=math.inf,
        name=f"W_{lam:g}",
        slope_exponent=min(0.0, sigma - 1.0),
    )


def _bracket(r: np.ndarray, params: ProblemParams) -> np.ndarray:
    """1 - (r/R)^k，r → R 时不损失精度"""
    with np.errstate(divide="ignore"):
        return np.where(r > 0, -np.expm1(params.k * np.log(r / params.R)), 1.0)


def eval_U(lam: float, r: Any, params: ProblemParams) -> np.ndarray:
    """U^λ(r)，即 W_λ 经 T = ∞ 的 Ioku 变换拉回到 B_R

    Raises:
        ValueError: r ≥ R 或 r < 0
    """
    _require_subcritical(params)
    r = np.asarray(r, dtype=float)
    if np.any(r >= params.R) or np.any(r < 0):
        raise ValueError(f"U^λ 只在 [0, R) 上有定义（R={params.R}）")
    t = r * _bracket(r, params) ** (-1.0 / params.k)
    return eval_W(lam, t, params)


def eval_U_slope(lam: float, r: Any, params: ProblemParams) -> np.ndarray:
    _require_subcritical(params)
    r = np.asarray(r, dtype=float)
    bracket = _bracket(r, params)
    t = r * bracket ** (-1.0 / params.k)
    # dt/dr = (t/r)^((N-1)/(p-1)) = bracket^(-(k+1)/k)
    return eval_W_slope(lam, t, params) * bracket ** (-(params.k + 1.0) / params.k)


def U_family(lam: float, params: ProblemParams) -> RadialFunction:
    _require_subcritical(params)
    _, sigma, _ = _w_exponents(params)
    return RadialFunction(
        value=lambda r: eval_U(lam, r, params),
        slope=lambda r: eval_U_slope(lam, r, params),
        support=params.R,
        name=f"U^{lam:g}",
        slope_exponent=min(0.0, sigma - 1.0),
    )


def truncated_bubble(lam: float, cutoff: float, params: ProblemParams) -> RadialFunction:
    """W_λ(t) - W_λ(cutoff)，支集 [0, cutoff)"""
    _require_subcritical(params)
    level = float(eval_W(lam, cutoff, params))
    _, sigma, _ = _w_exponents(params)
    return RadialFunction(
        value=lambda t: eval_W(lam, t, params) - level,
        slope=lambda t: eval_W_slope(lam, t, params),
        support=cutoff,
        name=f"W_{lam:g}-W_{lam:g}({cutoff:g})",
        slope_exponent=min(0.0, sigma - 1.0),
    )


def truncated_power(gamma: float, params: ProblemParams) -> RadialFunction:
    """Hardy 试验函数 r^(-γ) - R^(-γ)，要求 0 < γ < (N-p)/p"""
    limit = (params.N - params.p) / params.p
    if not 0 < gamma < limit:
        raise ValueError(f"γ 必须在 (0, {limit:g}) 内：{gamma}")
    R = params.R
    return RadialFunction(
        value=lambda r: r ** (-gamma) - R ** (-gamma),
        slope=lambda r: -gamma * r ** (-gamma - 1.0),
        support=R,
        name=f"r^-{gamma:g}",
        value_exponent=-gamma,
        slope_exponent=-gamma - 1.0,
    )


def polynomial_profile(power: float, R: float, exponent: float = 1.0) -> RadialFunction:
    """(1 - (r/R)^power)^exponent，径向测试套件的成员"""

    def value(r: np.ndarray) -> np.ndarray:
        return (1.0 - (r / R) ** power) ** exponent

    def slope(r: np.ndarray) -> np.ndarray:
        x = r / R
        return -exponent * power / R * x ** (power - 1.0) * (1.0 - x**power) ** (exponent - 1.0)

    return RadialFunction(value, slope, support=R, name=f"(1-r^{power:g})^{exponent:g}")


def radial_suite(R: float) -> List[RadialFunction]:
    """B_R 上零迹的径向测试函数"""
    return [
        polynomial_profile(1.0, R),
        polynomial_profile(2.0, R),
        polynomial_profile(3.0, R),
        polynomial_profile(2.0, R, 2.0),
    ]


# ---------------------------------------------------------------- 网格函数


def grid_function(
    nodes: Sequence[float],
    values: Sequence[float],
    interpolation: str = "pchip",
    support: float | None = None,
    name: str = "grid",
) -> RadialFunction:
    """网格采样的径向函数

    Args:
        nodes: 严格递增、首节点 > 0 的网格
        values: 节点值；首节点以内取常数
        interpolation: "pchip"（单调分段三次，导数用三点差分）或 "linear"
        support: 支集半径，默认最后一个节点
    """
    x = np.asarray(nodes, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or len(x) < 3:
        raise ValueError("网格与取值必须是等长的一维数组，且至少 3 个节点")
    if not x[0] > 0 or np.any(np.diff(x) <= 0):
        raise ValueError("网格必须严格递增且首节点 > 0")
    edge = float(support if support is not None else x[-1])

    if interpolation == "linear":
        slopes = np.diff(y) / np.diff(x)

        def value(r: np.ndarray) -> np.ndarray:
            return np.interp(r, x, y)

        def slope(r: np.ndarray) -> np.ndarray:
            idx = np.clip(np.searchsorted(x, r, side="right") - 1, 0, len(slopes) - 1)
            return np.where(r < x[0], 0.0, slopes[idx])

        breaks: Tuple[float, ...] = tuple(float(v) for v in x)
    elif interpolation == "pchip":
        interp = interpolate.PchipInterpolator(x, y, extrapolate=False)
        stencil = np.gradient(y, x, edge_order=2)
        d_interp = interpolate.PchipInterpolator(x, stencil, extrapolate=False)

        def value(r: np.ndarray) -> np.ndarray:
            return np.where(r < x[0], y[0], np.nan_to_num(interp(r)))

        def slope(r: np.ndarray) -> np.ndarray:
            return np.where(r < x[0], 0.0, np.nan_to_num(d_interp(r)))

        breaks = (float(x[0]),)
    else:
        raise ValueError(f"不支持的插值方式：{interpolation}。支持：pchip, linear")
    return RadialFunction(value, slope, support=edge, name=name, breaks=breaks)


def save_grid_csv(path: str | Path, nodes: Sequence[float], values: Sequence[float], grading: float) -> None:
    """两列 CSV (node, value)，首行注明网格加密指数"""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# grading={grading!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["node", "value"])
        for x, y in zip(nodes, values):
            writer.writerow([repr(float(x)), repr(float(y))])


def load_grid_csv(path: str | Path) -> Tuple[np.ndarray, np.ndarray, float]:
    grading = math.nan
    nodes: List[float] = []
    values: List[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0].startswith("#"):
                key, _, text = row[0].lstrip("# ").partition("=")
                if key.strip() == "grading":
                    grading = float(text)
                continue
            if row[0] == "node":
                continue
            nodes.append(float(row[0]))
            values.append(float(row[1]))
    if math.isnan(grading):
        raise ValueError(f"{path} 缺少 grading 头")
    return np.array(nodes), np.array(values), grading


# ---------------------------------------------------------------- 边界凸包


def _cone(t: np.ndarray) -> np.ndarray:
    return np.where(t <= 0.5, 1.0, 2.0 * (1.0 - t))


def _cone_slope(t: np.ndarray) -> np.ndarray:
    return np.where(t <= 0.5, 0.0, -2.0)


def _profile(kind: str, params: ProblemParams, mu: float | None) -> Tuple[ArrayFn, ArrayFn, Tuple[float, ...]]:
    """单位球上的剖面 v(t) 与 v'(t)，以及折点（以 t 计）"""
    if kind == "cone":
        return _cone, _cone_slope, (0.5,)
    if kind == "smooth":
        return (lambda t: (1.0 - t * t) ** 2), (lambda t: -4.0 * t * (1.0 - t * t)), ()
    if kind == "bubble":
        if mu is None or not mu > 0:
            raise ValueError("bubble 剖面需要正的集中参数 mu")
        N, p = params.N, params.p
        power = p / (p - 1.0)
        decay = (N - p) / p
        floor = (1.0 + (1.0 / mu) ** power) ** (-decay)
        norm = 1.0 - floor

        def value(t: np.ndarray) -> np.ndarray:
            return ((1.0 + (t / mu) ** power) ** (-decay) - floor) / norm

        def slope(t: np.ndarray) -> np.ndarray:
            z = t / mu
            return -decay * power * z ** (power - 1.0) * (1.0 + z**power) ** (-decay - 1.0) / (mu * norm)

        return value, slope, ()
    raise ValueError(f"不支持的剖面：{kind}。支持：cone, smooth, bubble")


def profile_bump(
    eps: float,
    center: float,
    params: ProblemParams,
    profile: str = "cone",
    mu: float | None = None,
) -> AxisymFunction:
    """u(x) = v(|x - center·e| / ε)，e 为对称轴方向

    Raises:
        ValueError: 支集不在 B_R 内
    """
    if not eps > 0:
        raise ValueError(f"ε 必须为正：{eps}")
    if center < 0 or center + eps > params.R * (1.0 + 1e-12):
        raise ValueError(f"支集 |x - {center:g}e| < {eps:g} 不在 B_R 内（R={params.R}）")
    v, dv, breaks = _profile(profile, params, mu)
    c = center

    def local(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(r * r + c * c - 2.0 * r * c * np.cos(theta), 0.0))

    def value(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return v(local(r, theta) / eps)

    def radial_factor(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        rho = local(r, theta)
        safe = np.where(rho > 0, rho, 1.0)
        return np.where(rho > 0, dv(rho / eps) / (eps * safe), 0.0)

    def d_r(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return radial_factor(r, theta) * (r - c * np.cos(theta))

    def d_theta(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return radial_factor(r, theta) * r * c * np.sin(theta)

    label = f"{profile}(eps={eps:g}, center={center:g}" + (f", mu={mu:g})" if mu else ")")
    return AxisymFunction(
        value=value,
        d_r=d_r,
        d_theta=d_theta,
        support=BallSupport(center, eps, tuple(b * eps for b in breaks)),
        name=label,
        radial=center == 0.0,
    )


def boundary_bump(eps: float, params: ProblemParams, profile: str = "cone", mu: float | None = None) -> AxisymFunction:
    """球心 x_ε = (R - 2ε)e、半径 ε 的边界凸包

    默认剖面为锥形 v(t) = 1 (t ≤ 1/2)，2(1 - t) (t > 1/2)。

    Raises:
        ValueError: ε 不在 (0, R/4) 内
    """
    if not 0 < eps < params.R / 4:
        raise ValueError(f"ε 必须在 (0, R/4) 内：ε={eps}, R={params.R}")
    return profile_bump(eps, params.R - 2.0 * eps, params, profile, mu)


def bump_energy_unit(params: ProblemParams, profile: str = "cone") -> float:
    """E_v = ∫_(B_1) |∇v|^p，锥形剖面有闭式"""
    if profile != "cone":
        raise ValueError("闭式仅对锥形剖面给出")
    N, p = params.N, params.p
    return sphere_area(N) * 2.0**p * (1.0 - 2.0 ** (-N)) / N


# ---------------------------------------------------------------- 球面平均


def spherical_average(w: AxisymFunction, q: float, N: int, order: int = SPHERICAL_AVERAGE_ORDER) -> RadialFunction:
    """W(r) = (ω_(N-1)^(-1) ∫_(S^(N-1)) |w(rω)|^q dS)^(1/q)

    支集取 w 支集球的外半径。球面 |x| = r 与支集球相交的极冠上用 Gauss 规则，
    支集偏心时极冠随 r 变化。导数按 W' = W^(1-q) · 平均(|w|^(q-2) w ∂_r w)。
    """
    if not q > 1:
        raise ValueError(f"q 必须大于 1：{q}")
    t, wt = _legendre(order)
    c, rho = w.support.center, w.support.radius
    outer = abs(c) + rho
    area_ratio = sphere_area(N - 1) / sphere_area(N)

    def cap(r: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        lo = np.zeros_like(r)
        hi = np.full_like(r, math.pi)
        if c != 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                bound = (r * r + c * c - rho * rho) / (2.0 * r * abs(c))
            bound = np.where(r > 0, bound, -1.0 if abs(c) < rho else 1.0)
            edge = np.arccos(np.clip(bound, -1.0, 1.0))
            if c > 0:
                hi = edge
            else:
                lo = math.pi - edge
        half = 0.5 * (hi - lo)
        theta = lo[:, None] + half[:, None] * (1.0 + t)[None, :]
        weights = half[:, None] * wt[None, :] * np.sin(theta) ** (N - 2) * area_ratio
        return np.broadcast_to(r[:, None], theta.shape), theta, weights

    def moment(r: np.ndarray) -> np.ndarray:
        rr, th, weights = cap(r)
        return np.sum(np.abs(w(rr, th)) ** q * weights, axis=1)

    def value(r: np.ndarray) -> np.ndarray:
        return moment(r) ** (1.0 / q)

    def slope(r: np.ndarray) -> np.ndarray:
        rr, th, weights = cap(r)
        vals = w(rr, th)
        mixed = np.sum(np.abs(vals) ** (q - 2.0) * vals * w.grad_r(rr, th) * weights, axis=1)
        m = np.sum(np.abs(vals) ** q * weights, axis=1)
        safe = np.where(m > 0, m, 1.0)
        return np.where(m > 0, mixed * safe ** (1.0 / q - 1.0), 0.0)

    # 球面开始离开支集球的半径
    breaks = tuple(b for b in (abs(abs(c) - rho),) if 0 < b < outer)
    return RadialFunction(value, slope, support=outer, name=f"avg_{q:g}[{w.name}]", breaks=breaks)


# ---------------------------------------------------------------- 试验函数族


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))


def _logit(x: float) -> float:
    return math.log(x / (1.0 - x))


@dataclass(frozen=True)
class TrialFamily:
    """带参数盒的试验函数族

    无约束坐标 z 经 decode 映到盒内的自然参数；每个成员的支集都在 B_R 内。
    """

    name: str
    params: ProblemParams
    min_width: float
    starts: Tuple[Tuple[float, ...], ...] = field(default=())

    @property
    def dimension(self) -> int:
        return {"boundary-bump": 2, "bubble": 3, "transported-extremal": 1}[self.name]

    def _width(self, z: float) -> float:
        lo, hi = math.log(self.min_width), math.log(0.25 * self.params.R * (1.0 - 1e-9))
        return math.exp(lo + (hi - lo) * _sigmoid(z))

    def _width_code(self, eps: float) -> float:
        lo, hi = math.log(self.min_width), math.log(0.25 * self.params.R * (1.0 - 1e-9))
        return _logit((math.log(eps) - lo) / (hi - lo))

    def decode(self, z: Sequence[float]) -> Dict[str, float]:
        R = self.params.R
        if self.name == "transported-extremal":
            return {"lam": math.exp(6.0 * math.tanh(z[0] / 6.0))}
        eps = self._width(z[0])
        center = eps + (R - 2.0 * eps) * _sigmoid(z[1])
        natural = {"eps": eps, "center": center}
        if self.name == "bubble":
            lo = math.log(MIN_CONCENTRATION)
            natural["mu"] = math.exp(lo * (1.0 - _sigmoid(z[2])))
        return natural

    def encode(self, natural: Dict[str, float]) -> Tuple[float, ...]:
        R = self.params.R
        if self.name == "transported-extremal":
            return (6.0 * math.atanh(math.log(natural["lam"]) / 6.0),)
        eps = natural["eps"]
        z = [self._width_code(eps), _logit((natural["center"] - eps) / (R - 2.0 * eps))]
        if self.name == "bubble":
            z.append(_logit(1.0 - math.log(natural["mu"]) / math.log(MIN_CONCENTRATION)))
        return tuple(z)

    def build(self, natural: Dict[str, float]) -> RadialFunction | AxisymFunction:
        if self.name == "transported-extremal":
            return U_family(natural["lam"], self.params)
        if self.name == "bubble":
            return profile_bump(natural["eps"], natural["center"], self.params, "bubble", natural["mu"])
        return profile_bump(natural["eps"], natural["center"], self.params, "cone")


FAMILY_NAMES = ("boundary-bump", "bubble", "transported-extremal")


def trial_family(name: str, params: ProblemParams, min_width: float) -> TrialFamily:
    """按名字构造试验函数族及其 8 个确定性起点

    Raises:
        ValueError: 族名未知，或最小宽度超出参数盒
    """
    if name not in FAMILY_NAMES:
        raise ValueError(f"不支持的试验函数族：{name}。支持：{', '.join(FAMILY_NAMES)}")
    R = params.R
    if not 0 < min_width < R / 64:
        raise ValueError(f"最小宽度必须在 (0, R/64) 内：{min_width}")
    if name == "transported-extremal" and params.s >= params.p:
        raise ValueError("s = p 时 transported-extremal 族为空")
    family = TrialFamily(name, params, min_width)
    if name == "transported-extremal":
        natural = [{"lam": lam} for lam in (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    elif name == "boundary-bump":
        natural = [
            {"eps": R / d, "center": R - g * R / d}
            for d in (8.0, 16.0, 32.0, 64.0)
            for g in (2.0, 1.25)
        ]
    else:
        natural = [
            {"eps": R / d, "center": R - g * R / d, "mu": mu}
            for d in (16.0, 256.0)
            for mu in (0.2, 0.02)
            for g in (2.0, 1.25)
        ]
    natural = [n for n in natural if "eps" not in n or n["eps"] > min_width]
    return replace(family, starts=tuple(family.encode(n) for n in natural))
