"""I_a 与 I_(a,rad) 的数值上界

径向问题用 P1 有限元上的归一化梯度流；非径向问题在试验函数族上做
Nelder–Mead 搜索。报告的每个最小值都是一个显式可容许函数的商，
在完整容差下重新求值后才标记为已认证的上界。
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg, optimize

from .errors import VerificationError
from .funcspace import (
    RadialFunction,
    TrialFamily,
    U_family,
    boundary_bump,
    grid_function,
    polynomial_profile,
    profile_bump,
    trial_family,
    truncated_power,
)
from .functionals import QuotientReport, rayleigh_quotient
from .params import ProblemParams, beta, hardy_sobolev_level, p_star, rearrange_threshold, threshold_A
from .parallel import parallel_map
from .quadrature import QuadratureError, QuadratureSpec, _legendre, graded_offsets, sphere_area

logger = logging.getLogger(__name__)

DEFAULT_GRID_NODES = 2000
DEFAULT_GRID_GRADING = 3.0
DEFAULT_GAUSS_ORDER = 6
INITIAL_STEP = 0.1
MIN_STEP = 1e-14
STOP_RTOL = 1e-8
SEARCH_BUDGET = 500
SEARCH_RTOL = 1e-6


class MinimizeResult(BaseModel):
    """一次最小化的结果

    Attributes:
        method: gradient-flow 或 nelder-mead
        quotient: 最优商（已认证时为完整容差下的重新求值）
        quotient_error: 商的误差估计
        parameters: 试验函数族的自然参数
        nodes, values: 梯度流得到的网格函数
        trace: 梯度流每个接受步的离散商，或各起点的搜索结果
        certified: 商是否为完整容差下求值的上界
    """

    method: str
    family: str = ""
    quotient: float
    quotient_error: float
    parameters: Dict[str, float] = Field(default_factory=dict)
    nodes: List[float] = Field(default_factory=list)
    values: List[float] = Field(default_factory=list)
    trace: List[float] = Field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    certified: bool = False
    function: str = ""


# ---------------------------------------------------------------- 径向梯度流


@dataclass(frozen=True)
class RadialDiscretization:
    """[0, R] 上两端加密的 P1 离散

    节点 x_0 = 0 < x_1 < ... < x_n = R。未知量是 x_1..x_(n-1) 处的值；
    [0, x_1] 上取常数 u(x_1)，x_n 处为零。
    """

    params: ProblemParams
    nodes: np.ndarray
    widths: np.ndarray
    energy_coeff: np.ndarray
    gauss_shape: np.ndarray
    gauss_weight: np.ndarray

    @classmethod
    def build(
        cls,
        params: ProblemParams,
        n_nodes: int = DEFAULT_GRID_NODES,
        grading: float = DEFAULT_GRID_GRADING,
        gauss_order: int = DEFAULT_GAUSS_ORDER,
    ) -> "RadialDiscretization":
        if n_nodes < 4:
            raise ValueError(f"网格节点数至少为 4：{n_nodes}")
        R, N, k = params.R, params.N, params.k
        left, right = graded_offsets(n_nodes, grading, grading)
        nodes = R * left
        in_left = left[:-1] + left[1:] <= 1.0
        widths = R * np.where(in_left, left[1:] - left[:-1], right[:-1] - right[1:])
        energy_coeff = sphere_area(N) * (nodes[1:] ** N - nodes[:-1] ** N) / N

        xi, wt = _legendre(gauss_order)
        shape = 0.5 * (1.0 + xi)
        # Gauss 点到 0 与到 R 的距离各自精确
        x = nodes[:-1, None] + widths[:, None] * shape[None, :]
        d = R * right[1:, None] + widths[:, None] * (1.0 - shape[None, :])
        x = np.where(in_left[:, None], x, R - d)
        d = np.where(in_left[:, None], R - x, d)
        one_minus_rho = -np.expm1(k * np.log1p(-d / R))
        weight = x ** (N - 1 - params.s) * ((1.0 - params.a) + params.a * one_minus_rho) ** (-beta(params))
        gauss_weight = sphere_area(N) * 0.5 * widths[:, None] * wt[None, :] * weight
        return cls(params, nodes, widths, energy_coeff, shape, gauss_weight)

    @property
    def size(self) -> int:
        return len(self.nodes) - 2

    def expand(self, v: np.ndarray) -> np.ndarray:
        full = np.empty(len(self.nodes))
        full[0] = v[0]
        full[1:-1] = v
        full[-1] = 0.0
        return full

    def _collapse(self, df: np.ndarray) -> np.ndarray:
        dv = df[1:-1].copy()
        dv[0] += df[0]
        return dv

    def energy(self, v: np.ndarray) -> float:
        slopes = np.diff(self.expand(v)) / self.widths
        return float(np.sum(self.energy_coeff * np.abs(slopes) ** self.params.p))

    def energy_grad(self, v: np.ndarray) -> np.ndarray:
        p = self.params.p
        slopes = np.diff(self.expand(v)) / self.widths
        flux = self.energy_coeff * p * np.sign(slopes) * np.abs(slopes) ** (p - 1.0) / self.widths
        df = np.zeros(len(self.nodes))
        df[1:] += flux
        df[:-1] -= flux
        return self._collapse(df)

    def _at_gauss(self, v: np.ndarray) -> np.ndarray:
        full = self.expand(v)
        return full[:-1, None] * (1.0 - self.gauss_shape[None, :]) + full[1:, None] * self.gauss_shape[None, :]

    def norm(self, v: np.ndarray) -> float:
        q = p_star(self.params)
        return float(np.sum(self.gauss_weight * np.abs(self._at_gauss(v)) ** q))

    def norm_grad(self, v: np.ndarray) -> np.ndarray:
        q = p_star(self.params)
        values = self._at_gauss(v)
        dens = self.gauss_weight * q * np.sign(values) * np.abs(values) ** (q - 1.0)
        df = np.zeros(len(self.nodes))
        df[:-1] += np.sum(dens * (1.0 - self.gauss_shape[None, :]), axis=1)
        df[1:] += np.sum(dens * self.gauss_shape[None, :], axis=1)
        return self._collapse(df)

    def quotient(self, v: np.ndarray) -> float:
        exponent = self.params.p / p_star(self.params)
        return self.energy(v) / self.norm(v) ** exponent

    def quotient_grad(self, v: np.ndarray) -> np.ndarray:
        exponent = self.params.p / p_star(self.params)
        E, D = self.energy(v), self.norm(v)
        return self.energy_grad(v) / D**exponent - exponent * E * D ** (-exponent - 1.0) * self.norm_grad(v)

    def preconditioner(self) -> np.ndarray:
        """p = 2 的径向刚度加集中质量，三对角带状存储"""
        N, R = self.params.N, self.params.R
        n = self.size
        stiff = self.energy_coeff / self.widths**2
        mass = sphere_area(N) * self.nodes ** (N - 1) * 0.5 * (
            np.concatenate([[0.0], self.widths]) + np.concatenate([self.widths, [0.0]])
        ) / R**2
        diag = mass[1:-1].copy()
        diag[0] += mass[0]
        # 第 e 个单元连接全局节点 e 与 e+1，对应未知量 e-1 与 e
        diag += stiff[1:]
        diag[1:] += stiff[1:-1]
        off = -stiff[1:-1]
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1, :] = diag
        ab[2, :-1] = off
        return ab

    def sample(self, u: RadialFunction) -> np.ndarray:
        return np.asarray(u(self.nodes[1:-1]), dtype=float)


def _initial_function(params: ProblemParams, initial: RadialFunction | str) -> RadialFunction:
    if isinstance(initial, RadialFunction):
        return initial
    if initial == "generic":
        return polynomial_profile(2.0, params.R)
    if initial == "extremal":
        return U_family(1.0, params)
    raise ValueError(f"不支持的初值：{initial}。支持：generic, extremal 或 RadialFunction")


def minimize_radial(
    params: ProblemParams,
    n_nodes: int = DEFAULT_GRID_NODES,
    steps: int = 5000,
    initial: RadialFunction | str = "generic",
    spec: QuadratureSpec | None = None,
    grading: float = DEFAULT_GRID_GRADING,
    certify: bool = True,
) -> MinimizeResult:
    """径向商的归一化梯度流

    方向为 H^1 预条件梯度，步长以 0.1 起步、减半回溯直到商下降；
    每步之后把加权范数归一化为 1。相对变化小于 1e-8 或步数用尽时停止。
    a = 1 且 0 ≤ s < p 时收敛到 C_(N,p,s)；a < 1 时在固定网格上停在其上方。

    Raises:
        VerificationError: 商的轨迹出现上升
    """
    disc = RadialDiscretization.build(params, n_nodes, grading)
    q = p_star(params)
    v = disc.sample(_initial_function(params, initial))
    v = v / disc.norm(v) ** (1.0 / q)
    ab = disc.preconditioner()
    value = disc.quotient(v)
    trace = [value]
    step = INITIAL_STEP
    converged = False
    iterations = 0
    for iterations in range(1, steps + 1):
        direction = linalg.solve_banded((1, 1), ab, disc.quotient_grad(v))
        scale = np.max(np.abs(v)) / max(np.max(np.abs(direction)), 1e-300)
        step = min(INITIAL_STEP, 2.0 * step)
        while step > MIN_STEP:
            trial = v - step * scale * direction
            trial = trial / disc.norm(trial) ** (1.0 / q)
            trial_value = disc.quotient(trial)
            if trial_value < value:
                break
            step *= 0.5
        else:
            converged = True
            logger.info("gradient flow stalled at step %d: quotient=%.12g", iterations, value)
            break
        change = (value - trial_value) / trial_value
        v, value = trial, trial_value
        trace.append(value)
        if iterations % 500 == 0:
            logger.info("gradient flow step %d: quotient=%.12g", iterations, value)
        if change < STOP_RTOL:
            converged = True
            break
    if any(b > a for a, b in zip(trace, trace[1:])):
        raise VerificationError("梯度流的商轨迹出现上升")

    nodes = disc.nodes[1:]
    values = np.append(v, 0.0)
    result = MinimizeResult(
        method="gradient-flow",
        quotient=value,
        quotient_error=0.0,
        nodes=nodes.tolist(),
        values=values.tolist(),
        trace=trace,
        iterations=iterations,
        converged=converged,
        function=f"P1[{n_nodes}]",
    )
    if not certify:
        return result
    report = rayleigh_quotient(grid_function(nodes, values, "linear", params.R), params, spec)
    return result.model_copy(
        update={"quotient": report.quotient, "quotient_error": report.quotient_error, "certified": True}
    )


# ---------------------------------------------------------------- 试验函数族搜索


def _search_spec(spec: QuadratureSpec) -> QuadratureSpec:
    return replace(spec, rtol=max(spec.rtol, SEARCH_RTOL))


def _evaluate(family: TrialFamily, natural: Dict[str, float], params: ProblemParams, spec: QuadratureSpec) -> QuotientReport:
    return rayleigh_quotient(family.build(natural), params, spec)


def _search_from(
    family: TrialFamily, start: Tuple[float, ...], params: ProblemParams, spec: QuadratureSpec, budget: int
) -> Tuple[float, Tuple[float, ...]]:
    def objective(z: np.ndarray) -> float:
        try:
            return _evaluate(family, family.decode(z), params, spec).quotient
        except (QuadratureError, ValueError) as e:
            logger.debug("trial %s rejected: %s", z, e)
            return math.inf

    res = optimize.minimize(
        objective,
        x0=np.asarray(start, dtype=float),
        method="Nelder-Mead",
        options={"maxfev": budget, "xatol": 1e-4, "fatol": 1e-7},
    )
    return float(res.fun), tuple(float(z) for z in res.x)


def best_trial_quotient(
    params: ProblemParams,
    family: TrialFamily | str,
    budget: int = SEARCH_BUDGET,
    spec: QuadratureSpec | None = None,
    threads: int | None = None,
    max_starts: int | None = None,
) -> MinimizeResult:
    """在试验函数族上搜索最小商

    从族的确定性起点出发各做一次 Nelder–Mead（每个起点至多 budget 次求值），
    起点之间并行；按起点顺序取最小者。最优点在完整容差下重新求值并认证。

    Raises:
        ValueError: 族对该参数组为空
    """
    spec = spec or QuadratureSpec()
    if isinstance(family, str):
        family = trial_family(family, params, 4.0 * params.R / spec.max_panels)
    starts = family.starts[:max_starts] if max_starts else family.starts
    if not starts:
        raise ValueError(f"试验函数族 {family.name} 在最小宽度 {family.min_width:g} 下没有可用起点")
    search = _search_spec(spec)
    outcomes = parallel_map(lambda z: _search_from(family, z, params, search, budget), starts, threads)
    values = [value for value, _ in outcomes]
    best = int(np.argmin(values))
    if not math.isfinite(values[best]):
        raise QuadratureError(f"试验函数族 {family.name} 的所有起点都无法求值")
    natural = family.decode(outcomes[best][1])
    report = _evaluate(family, natural, params, spec)
    logger.info("best %s quotient at a=%g: %.10g %s", family.name, params.a, report.quotient, natural)
    return MinimizeResult(
        method="nelder-mead",
        family=family.name,
        quotient=report.quotient,
        quotient_error=report.quotient_error,
        parameters=natural,
        trace=values,
        iterations=budget * len(starts),
        converged=True,
        certified=True,
        function=report.function,
    )


def concentration_curve(
    params: ProblemParams,
    center: float,
    eps_grid: Sequence[float],
    spec: QuadratureSpec | None = None,
    profile: str = "cone",
) -> List[Tuple[float, float]]:
    """以 center 为心、宽度 ε 的凸包在 ε → 0 时的商

    a < 1 且 center 在内部时商按 ε^(-(N-p)s/(N-s)) 发散。
    """
    rows = []
    for eps in eps_grid:
        report = rayleigh_quotient(profile_bump(eps, center, params, profile), params, spec)
        rows.append((float(eps), report.quotient))
    return rows


# ---------------------------------------------------------------- a 扫描


class ScanRow(BaseModel):
    a: float
    best_quotient: float
    error: float
    family: str
    parameters: Dict[str, float]
    radial_level: float
    radial_level_error: float
    below_radial: bool


class AStarReport(BaseModel):
    """a_* 的上界 â；没有见证时 a_hat 为 None"""

    a_hat: float | None
    threshold_A: float
    radial_level: float
    margin: float
    rows: List[ScanRow]
    witness: MinimizeResult | None = None
    message: str


def break_scan(
    params: ProblemParams,
    a_grid: Sequence[float],
    families: Sequence[str] = ("boundary-bump",),
    budget: int = SEARCH_BUDGET,
    spec: QuadratureSpec | None = None,
    threads: int | None = None,
    max_starts: int | None = None,
    margin: float = 0.0,
) -> Tuple[List[ScanRow], List[MinimizeResult]]:
    """每个 a 上取各族最优试验商，与径向水平 C_(N,p,s) 比较；a 网格并行"""
    spec = spec or QuadratureSpec()
    level = hardy_sobolev_level(params, spec)

    def scan(a: float) -> MinimizeResult:
        local = params.with_a(a)
        results = [best_trial_quotient(local, name, budget, spec, 1, max_starts) for name in families]
        return min(results, key=lambda r: r.quotient)

    best = parallel_map(scan, sorted(a_grid), threads)
    rows = [
        ScanRow(
            a=a,
            best_quotient=result.quotient,
            error=result.quotient_error,
            family=result.family,
            parameters=result.parameters,
            radial_level=level.value,
            radial_level_error=level.error,
            below_radial=result.quotient + result.quotient_error < level.value - level.error - margin,
        )
        for a, result in zip(sorted(a_grid), best)
    ]
    return rows, best


def estimate_a_star_upper(
    params: ProblemParams,
    a_grid: Sequence[float],
    margin: float = 1e-3,
    families: Sequence[str] = ("boundary-bump",),
    budget: int = SEARCH_BUDGET,
    spec: QuadratureSpec | None = None,
    threads: int | None = None,
    max_starts: int | None = None,
) -> AStarReport:
    """升序扫描 a 网格，返回第一个试验商低于 C_(N,p,s) - margin 的 â

    Raises:
        ValueError: s 不在 (0, p) 内，或网格不在 (s(p-1)/(p(N-1)), 1] 内
    """
    if not 0 < params.s < params.p:
        raise ValueError(f"a_* 扫描要求 0 < s < p（s={params.s}, p={params.p}）")
    tau = rearrange_threshold(params)
    if not a_grid or any(not tau < a <= 1 for a in a_grid):
        raise ValueError(f"a 网格必须在 ({tau:g}, 1] 内")
    rows, results = break_scan(params, a_grid, families, budget, spec, threads, max_starts, margin)
    A = threshold_A(params)
    level = rows[0].radial_level
    for row, result in zip(rows, results):
        if row.below_radial:
            message = f"a_* ≤ {row.a:g}：{row.family} 试验函数的商 {row.best_quotient:.6g} < {level:.6g} - {margin:g}"
            return AStarReport(
                a_hat=row.a, threshold_A=A, radial_level=level, margin=margin, rows=rows, witness=result, message=message
            )
    return AStarReport(
        a_hat=None, threshold_A=A, radial_level=level, margin=margin, rows=rows, message="no witness：网格内没有找到低于径向水平的试验函数"
    )


# ---------------------------------------------------------------- 衰减拟合与单调性


class DecayFit(BaseModel):
    slope: float
    expected: float
    intercept: float
    eps: List[float]
    quotients: List[float]
    errors: List[float]
    strictly_decreasing: bool


def decay_fit(
    params: ProblemParams,
    k_values: Sequence[int] = tuple(range(3, 9)),
    spec: QuadratureSpec | None = None,
    profile: str = "cone",
    threads: int | None = None,
) -> DecayFit:
    """a = 1 时 log Q_1(u_ε) 对 log ε 的最小二乘斜率，ε = R 2^(-k)

    期望斜率 (N-1)(p-s)/(N-s)。

    Raises:
        ValueError: a ≠ 1、s = p、少于 3 个点，或 ε 小于可分辨宽度
    """
    spec = spec or QuadratureSpec()
    if params.a != 1.0 or params.s >= params.p:
        raise ValueError("衰减拟合要求 a = 1 且 0 ≤ s < p")
    if len(k_values) < 3:
        raise ValueError(f"衰减拟合至少需要 3 个点：{len(k_values)}")
    eps = [params.R * 2.0 ** (-k) for k in k_values]
    floor = 4.0 * params.R / spec.max_panels
    if min(eps) < floor:
        raise ValueError(f"ε = {min(eps):g} 小于 4 个网格间距 {floor:g}，无法分辨")
    reports = parallel_map(lambda e: rayleigh_quotient(boundary_bump(e, params, profile), params, spec), eps, threads)
    quotients = [r.quotient for r in reports]
    slope, intercept = np.polyfit(np.log(eps), np.log(quotients), 1)
    N, p, s = params.N, params.p, params.s
    ordered = [q for _, q in sorted(zip(eps, quotients), reverse=True)]
    return DecayFit(
        slope=float(slope),
        expected=(N - 1) * (p - s) / (N - s),
        intercept=float(intercept),
        eps=eps,
        quotients=quotients,
        errors=[r.quotient_error for r in reports],
        strictly_decreasing=all(b < a for a, b in zip(ordered, ordered[1:])),
    )


class MonotonicityRow(BaseModel):
    function: str
    quotients: List[float]
    non_increasing: bool


class MonotonicityReport(BaseModel):
    a_grid: List[float]
    rows: List[MonotonicityRow]
    pointwise_minimum: List[float]
    minimum_non_increasing: bool


def _non_increasing(values: Sequence[float], errors: Sequence[float]) -> bool:
    return all(b <= a + ea + eb for a, b, ea, eb in zip(values, values[1:], errors, errors[1:]))


def monotonicity_scan(
    suite: Sequence[Any],
    params: ProblemParams,
    a_grid: Sequence[float],
    spec: QuadratureSpec | None = None,
    threads: int | None = None,
) -> MonotonicityReport:
    """每个试验函数的 Q_a 沿升序 a 网格是否不增，以及逐点最小值"""
    grid = sorted(a_grid)
    jobs = [(u, a) for u in suite for a in grid]
    reports = parallel_map(lambda job: rayleigh_quotient(job[0], params.with_a(job[1]), spec), jobs, threads)
    rows = []
    for i, u in enumerate(suite):
        chunk = reports[i * len(grid) : (i + 1) * len(grid)]
        values = [r.quotient for r in chunk]
        rows.append(
            MonotonicityRow(
                function=u.name,
                quotients=values,
                non_increasing=_non_increasing(values, [r.quotient_error for r in chunk]),
            )
        )
    minimum = [min(row.quotients[j] for row in rows) for j in range(len(grid))]
    return MonotonicityReport(
        a_grid=grid,
        rows=rows,
        pointwise_minimum=minimum,
        minimum_non_increasing=all(b <= a * (1.0 + 1e-9) for a, b in zip(minimum, minimum[1:])),
    )


def hardy_sequence(
    params: ProblemParams, gammas: Sequence[float], spec: QuadratureSpec | None = None
) -> List[Tuple[float, float]]:
    """截断幂 r^(-γ) - R^(-γ) 的商；γ → (N-p)/p 时趋于 ((N-p)/p)^p"""
    return [(float(g), rayleigh_quotient(truncated_power(g, params), params, spec).quotient) for g in gammas]
