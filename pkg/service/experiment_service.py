"""实验服务层，每个 CLI 子命令对应一个 run_* 函数

先校验参数，再调用 hardy_sobolev 核心模块，最后把结果整理成可直接
序列化的字典。曲线类结果在 "rows" 下给出逐行数据，供 CSV 输出使用。
"""

import logging
import math
from typing import Any, Callable, Dict, List, Sequence

import numpy as np

from hardy_sobolev import funcspace, limits, minimize, params as hs_params, scalings, transforms
from hardy_sobolev.errors import VerificationError
from hardy_sobolev.functionals import rayleigh_quotient
from hardy_sobolev.params import ProblemParams
from hardy_sobolev.quadrature import QuadratureSpec
from models.run_config import RunConfig

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "constants",
    "verify-transforms",
    "quotient",
    "minimize-radial",
    "break-scan",
    "a-star",
    "decay-fit",
    "dim-limit",
    "scaling-scan",
)

IDENTITY_TOL = 1e-6
DECAY_SLOPE_TOL = 0.05
BUBBLE_LAMBDAS = (0.5, 1.0, 2.0)
DEFAULT_A_GRID = (0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
DEFAULT_M_GRID = (10.0, 1e2, 1e3, 1e4, 1e5, 1e6)
WEIGHTED_M_GRID = (10.0, 30.0, 100.0, 300.0)
STIRLING_T = 50.0


# ---------------------------------------------------------------- 校验


def validate_subcommand(name: str) -> None:
    """验证子命令名

    Raises:
        ValueError: 子命令不存在时
    """
    if name not in SUBCOMMANDS:
        raise ValueError(f"不支持的子命令：{name}。支持：{', '.join(SUBCOMMANDS)}")


def validate_threads(threads: int | None) -> None:
    if threads is not None and threads < 1:
        raise ValueError(f"线程数必须 ≥ 1：{threads}")


def validate_grid(values: Sequence[float], label: str, lo: float = -math.inf, hi: float = math.inf) -> List[float]:
    """验证网格非空、有限且落在 [lo, hi] 内，返回升序列表

    Raises:
        ValueError: 网格为空或越界时
    """
    grid = sorted(float(v) for v in values)
    if not grid:
        raise ValueError(f"{label} 网格不能为空")
    if any(not math.isfinite(v) or not lo <= v <= hi for v in grid):
        raise ValueError(f"{label} 网格必须在 [{lo:g}, {hi:g}] 内：{grid}")
    return grid


def validate_choice(value: str, choices: Sequence[str], label: str) -> None:
    if value not in choices:
        raise ValueError(f"不支持的{label}：{value}。支持：{', '.join(choices)}")


def build_params(config: RunConfig) -> ProblemParams:
    """把配置中的参数组转成 ProblemParams

    Raises:
        ValueError: 违反任一参数约束时，消息中指明该约束
    """
    return hs_params.validate(config.params_dict())


def quadrature_spec(config: RunConfig) -> QuadratureSpec:
    return QuadratureSpec(rtol=config.rtol, max_panels=config.max_panels)


def _option(config: RunConfig, key: str, default: Any = None) -> Any:
    value = config.options.get(key)
    return default if value is None else value


# ---------------------------------------------------------------- 子命令


def run_constants(config: RunConfig) -> Dict[str, Any]:
    """闭式常数汇总，附 C_(N,p,s) 与 s = 0 时的 I_a 水平"""
    params = build_params(config)
    data = hs_params.derived_constants(params)
    level = hs_params.hardy_sobolev_level(params, quadrature_spec(config))
    data["C_Nps"] = level.value
    data["C_Nps_error"] = level.error
    data["k"] = params.k
    if params.s == 0:
        data["s0_level"] = hs_params.s0_level(params)
    if not math.isinf(params.T):
        data["a_from_T"] = hs_params.a_from_T(params)
    return data


def _ball_identity_reports(
    tmap: transforms.TransformMap, suite: Sequence[funcspace.RadialFunction], weight: float, spec: QuadratureSpec
) -> List[transforms.IdentityReport]:
    return [
        transforms.verify_norm_identity(tmap, u, identity, spec, weight=weight)
        for u in suite
        for identity in transforms.IDENTITIES
    ]


def _dim_suite(N: int, p: float, R: float) -> List[funcspace.RadialFunction]:
    bubble_params = ProblemParams(N=N, p=p, s=0.0, R=R)
    return [funcspace.truncated_bubble(lam, R, bubble_params) for lam in BUBBLE_LAMBDAS]


def run_verify_transforms(config: RunConfig) -> Dict[str, Any]:
    """对选定的映射类型，在 3 个径向测试函数上检查梯度与范数恒等式

    ioku 另在 B_T 内的偶极子上检查 L_p 算子恒等式（T = ∞ 时取 B_(2R)）。

    st 映射只用于 p = N，此时不构造 ProblemParams；kind 为 all 且 p ≠ N 时跳过 st。

    Raises:
        ValueError: 映射参数非法时
        VerificationError: 最大残差超过容差时
    """
    kind = _option(config, "kind", "all")
    validate_choice(kind, transforms.MAP_KINDS + ("all",), "映射类型")
    N, p, s, R = config.N, config.p, config.s, config.R
    T = math.inf if config.T is None else config.T
    m = _option(config, "m", N + 2)
    tol = float(_option(config, "tol", IDENTITY_TOL))
    spec = quadrature_spec(config)
    if kind == "all":
        # p = N 时只有 st 有定义，p < N 时 st 无定义
        kinds = [k for k in transforms.MAP_KINDS if (k == "st") == (p == N)]
    else:
        kinds = [kind]
    skipped = [k for k in transforms.MAP_KINDS if kind == "all" and k not in kinds]
    if kinds != ["st"]:
        build_params(config)

    suite = funcspace.radial_suite(R)[:3]
    reports: List[transforms.IdentityReport] = []
    for name in kinds:
        if name == "dim":
            for w in _dim_suite(N, p, R):
                reports += limits.verify_S_another(m, N, p, w, spec)
            continue
        tmap = transforms.make_map(name, N, p, R, T, m if name == "st" else None)
        reports += _ball_identity_reports(tmap, suite, s, spec)
        if name == "ioku":
            radius = 2.0 * R if math.isinf(T) else T
            reports.append(transforms.verify_operator_identity(tmap, _dipole(radius), spec))
    for name in skipped:
        logger.info("skipping %s map for N=%d, p=%g", name, N, p)

    max_residual = max((r.residual for r in reports), default=0.0)
    data = {
        "kinds": kinds,
        "skipped": skipped,
        "max_residual": max_residual,
        "tolerance": tol,
        "rows": [r.model_dump() for r in reports],
    }
    if max_residual > tol:
        raise VerificationError(f"恒等式残差 {max_residual:.3g} 超过容差 {tol:g}", data)
    return data


def _quotient_function(family: str, params: ProblemParams, config: RunConfig):
    R = params.R
    if family == "transported-extremal":
        return funcspace.U_family(float(_option(config, "lam", 1.0)), params)
    if family == "truncated-power":
        limit = (params.N - params.p) / params.p
        return funcspace.truncated_power(float(_option(config, "gamma", 0.5 * limit)), params)
    eps = float(_option(config, "eps", R / 16.0))
    center = float(_option(config, "center", R - 2.0 * eps))
    if family == "bubble":
        return funcspace.profile_bump(eps, center, params, "bubble", float(_option(config, "mu", 0.2)))
    return funcspace.profile_bump(eps, center, params, "cone")


QUOTIENT_FAMILIES = ("transported-extremal", "bubble", "boundary-bump", "truncated-power")


def run_quotient(config: RunConfig) -> Dict[str, Any]:
    """单个试验函数的 Rayleigh 商，附径向水平 C_(N,p,s)"""
    family = _option(config, "family", "transported-extremal")
    validate_choice(family, QUOTIENT_FAMILIES, "试验函数族")
    params = build_params(config)
    spec = quadrature_spec(config)
    report = rayleigh_quotient(_quotient_function(family, params, config), params, spec)
    data = report.flat()
    level = hs_params.hardy_sobolev_level(params, spec)
    data["radial_level"] = level.value
    data["radial_level_error"] = level.error
    return data


def run_minimize_radial(config: RunConfig) -> Dict[str, Any]:
    """径向梯度流；可从 CSV 网格函数起步，也可把结果存成 CSV 网格函数"""
    params = build_params(config)
    spec = quadrature_spec(config)
    nodes = int(_option(config, "nodes", minimize.DEFAULT_GRID_NODES))
    steps = int(_option(config, "steps", 5000))
    initial: Any = _option(config, "initial", "generic")
    load_grid = _option(config, "load_grid")
    if load_grid:
        grid_nodes, grid_values, _ = funcspace.load_grid_csv(load_grid)
        initial = funcspace.grid_function(grid_nodes, grid_values, "pchip", params.R, name=str(load_grid))
    result = minimize.minimize_radial(params, nodes, steps, initial, spec)
    save_grid = _option(config, "save_grid")
    if save_grid:
        funcspace.save_grid_csv(save_grid, result.nodes, result.values, minimize.DEFAULT_GRID_GRADING)
    data = result.model_dump(exclude={"nodes", "values"})
    level = hs_params.hardy_sobolev_level(params, spec)
    data["radial_level"] = level.value
    data["radial_level_error"] = level.error
    data["rows"] = [{"node": x, "value": v} for x, v in zip(result.nodes, result.values)]
    return data


def _scan_options(config: RunConfig) -> Dict[str, Any]:
    families = _option(config, "family", ["boundary-bump"])
    if isinstance(families, str):
        families = [families]
    for family in families:
        validate_choice(family, funcspace.FAMILY_NAMES, "试验函数族")
    return {
        "families": tuple(families),
        "budget": int(_option(config, "budget", minimize.SEARCH_BUDGET)),
        "max_starts": _option(config, "starts"),
    }


def run_break_scan(config: RunConfig) -> Dict[str, Any]:
    """沿 a 网格比较最优试验商与径向水平"""
    params = build_params(config)
    grid = validate_grid(_option(config, "a_grid", DEFAULT_A_GRID), "a", 0.0, 1.0)
    validate_threads(config.threads)
    rows, _ = minimize.break_scan(
        params, grid, spec=quadrature_spec(config), threads=config.threads, **_scan_options(config)
    )
    return {"radial_level": rows[0].radial_level, "rows": [_flat_row(row.model_dump()) for row in rows]}


def _flat_row(row: Dict[str, Any]) -> Dict[str, Any]:
    parameters = row.pop("parameters", {})
    row.update({f"param_{k}": v for k, v in parameters.items()})
    return row


def run_a_star(config: RunConfig) -> Dict[str, Any]:
    """a_* 的上界 â；没有见证不算失败"""
    params = build_params(config)
    grid = validate_grid(_option(config, "a_grid", DEFAULT_A_GRID), "a", 0.0, 1.0)
    margin = float(_option(config, "margin", 1e-3))
    validate_threads(config.threads)
    report = minimize.estimate_a_star_upper(
        params, grid, margin, spec=quadrature_spec(config), threads=config.threads, **_scan_options(config)
    )
    data = report.model_dump(exclude={"rows"})
    data["rows"] = [_flat_row(row.model_dump()) for row in report.rows]
    return data


def run_decay_fit(config: RunConfig) -> Dict[str, Any]:
    """a = 1 时 Q_1(u_ε) 的对数斜率

    Raises:
        VerificationError: 斜率偏离 (N-1)(p-s)/(N-s) 超过容差，或商不严格递减
    """
    params = build_params(config)
    k_min, k_max = int(_option(config, "k_min", 3)), int(_option(config, "k_max", 8))
    if k_max < k_min:
        raise ValueError(f"k_max 必须 ≥ k_min（{k_min}, {k_max}）")
    tol = float(_option(config, "tol", DECAY_SLOPE_TOL))
    fit = minimize.decay_fit(params, tuple(range(k_min, k_max + 1)), quadrature_spec(config), threads=config.threads)
    data = fit.model_dump(exclude={"eps", "quotients", "errors"})
    data["tolerance"] = tol
    data["rows"] = [
        {"eps": e, "quotient": q, "error": err} for e, q, err in zip(fit.eps, fit.quotients, fit.errors)
    ]
    if abs(fit.slope - fit.expected) > tol or not fit.strictly_decreasing:
        raise VerificationError(
            f"衰减斜率 {fit.slope:.4f} 与期望 {fit.expected:.4f} 不符或商不严格递减", data
        )
    return data


def _annulus_profile() -> funcspace.RadialFunction:
    """支集在 0.5 ≤ |y| ≤ 1 的 256 (t - 1/2)^2 (1 - t)^2"""

    def value(t: np.ndarray) -> np.ndarray:
        return np.where(t > 0.5, 256.0 * (t - 0.5) ** 2 * (1.0 - t) ** 2, 0.0)

    def slope(t: np.ndarray) -> np.ndarray:
        return np.where(t > 0.5, 512.0 * (t - 0.5) * (1.0 - t) * (1.5 - 2.0 * t), 0.0)

    return funcspace.RadialFunction(value, slope, support=1.0, name="annulus", breaks=(0.5,))


def run_dim_limit(config: RunConfig) -> Dict[str, Any]:
    """c(m) 曲线、Stirling 比值、加权极限与 m 维恒等式

    Raises:
        VerificationError: L(m) 超过 ∫|∇w|^p，或恒等式残差超过容差
    """
    N, p = config.N, config.p
    build_params(config)
    spec = quadrature_spec(config)
    grid = validate_grid(_option(config, "m_grid", DEFAULT_M_GRID), "m", N + 1e-9)
    curve = limits.c_of_m_curve(N, p, grid, config.threads)
    weighted = limits.weighted_limit_check(_annulus_profile(), WEIGHTED_M_GRID, N, p, spec, config.threads)
    m = int(_option(config, "m", N + 2))
    identities = [
        report for w in _dim_suite(N, p, config.R) for report in limits.verify_S_another(m, N, p, w, spec)
    ]
    data = {
        "target": curve.target,
        "eventually_decreasing": curve.eventually_decreasing(),
        "stirling_ratio": limits.stirling_ratio(STIRLING_T),
        "weighted": {
            "target": weighted.target,
            "energy": weighted.energies[0],
            "rows": [{"m": m_, "L": v, "gap": g} for m_, v, g in zip(weighted.m, weighted.values, weighted.gaps)],
        },
        "identities": [r.model_dump() for r in identities],
        "rows": curve.rows(),
    }
    energy = weighted.energies[0]
    if any(v > energy * (1.0 + config.rtol) for v in weighted.values):
        raise VerificationError("加权极限 L(m) 超过了 ∫|∇w|^p", data)
    worst = max(r.residual for r in identities)
    if worst > IDENTITY_TOL:
        raise VerificationError(f"m 维恒等式残差 {worst:.3g} 超过容差 {IDENTITY_TOL:g}", data)
    return data


def _dipole(radius: float) -> funcspace.AxisymFunction:
    """x_1 (1 - |x|^2)^2 的伸缩版本，支集半径 radius"""

    def g(t: np.ndarray) -> np.ndarray:
        x = t / radius
        return x * (1.0 - x * x) ** 2

    def dg(t: np.ndarray) -> np.ndarray:
        x = t / radius
        return (1.0 - x * x) * (1.0 - 5.0 * x * x) / radius

    return funcspace.separable(g, dg, np.cos, lambda th: -np.sin(th), radius, name=f"dipole({radius:g})")


def run_scaling_scan(config: RunConfig) -> Dict[str, Any]:
    """沿 λ 网格的伸缩能量曲线

    scaleN 取 λ = 2^(-k)，其余取 λ = 2^k，k = 0..k_max。scaleP 另给出到
    λ → ∞ 极限的相对差距。
    """
    kind = _option(config, "kind", "scaleN")
    validate_choice(kind, scalings.SCALING_KINDS, "伸缩类型")
    params = build_params(config)
    spec = quadrature_spec(config)
    k_max = int(_option(config, "k_max", 6))
    b = float(_option(config, "b", 1.0))
    sign = -1.0 if kind == "scaleN" else 1.0
    lam_grid = [2.0 ** (sign * k) for k in range(k_max + 1)]
    radius = 1.0 if kind in ("scaleN", "scaleP") else params.R
    w = _dipole(radius)
    curve = scalings.scaled_energy_curve(kind, w, params, lam_grid, spec, params.a, b, config.threads)
    data: Dict[str, Any] = {"kind": kind, "function": w.name, "rows": [point.model_dump() for point in curve]}
    if kind == "scaleN":
        data["unbounded"] = scalings.certify_unbounded(curve, w)
    if kind == "scaleP":
        gaps = scalings.limit_gap_curve(w, params, lam_grid, params.a, spec, config.threads)
        data["limit_energy"] = scalings.scale_p_limit_energy(w, params, params.a, spec)
        for row, gap in zip(data["rows"], gaps):
            row["gap"] = gap.energy
    return data


RUNNERS: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
    "constants": run_constants,
    "verify-transforms": run_verify_transforms,
    "quotient": run_quotient,
    "minimize-radial": run_minimize_radial,
    "break-scan": run_break_scan,
    "a-star": run_a_star,
    "decay-fit": run_decay_fit,
    "dim-limit": run_dim_limit,
    "scaling-scan": run_scaling_scan,
}


def run_subcommand(config: RunConfig) -> Dict[str, Any]:
    """校验子命令后分派

    Raises:
        ValueError: 参数非法
        VerificationError: 数值校验失败
        QuadratureError: 积分不收敛
    """
    validate_subcommand(config.subcommand)
    validate_threads(config.threads)
    try:
        return RUNNERS[config.subcommand](config)
    except Exception as e:
        logger.error("%s failed: %s", config.subcommand, e)
        raise
