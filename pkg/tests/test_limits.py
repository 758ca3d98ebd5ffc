"""测试维数极限 c(m)、Stirling 比值与加权极限"""

import math

import numpy as np
import pytest

from hardy_sobolev.funcspace import RadialFunction, polynomial_profile, truncated_bubble
from hardy_sobolev.limits import (
    c_of_m,
    c_of_m_curve,
    hardy_target,
    stirling_ratio,
    verify_S_another,
    weighted_limit_check,
)
from hardy_sobolev.params import ProblemParams


def oracle_c(m: float) -> float:
    """p = 2、N = 3 时用 lgamma 直接写出的 c(m)"""

    def log_area(n: float) -> float:
        return math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n)

    log_c = (
        math.log(math.pi * m * (m - 2.0))
        + (2.0 / m) * (math.lgamma(0.5 * m) - math.lgamma(m))
        + (2.0 / m) * (log_area(3) - log_area(m))
        - (2.0 - 2.0 / m) * math.log(m - 2.0)
    )
    return math.exp(log_c)


@pytest.mark.parametrize("m", [4.0, 10.0, 1e3, 1e5, 1e6])
def test_c_of_m_matches_lgamma_oracle(m):
    assert c_of_m(m, 3, 2.0) == pytest.approx(oracle_c(m), rel=1e-10)


def test_c_of_m_approaches_hardy_constant():
    grid = [10.0, 1e2, 1e3, 1e4, 1e5, 1e6]
    curve = c_of_m_curve(3, 2.0, grid, threads=2)
    assert curve.target == pytest.approx(0.25)
    assert curve.gaps[grid.index(1e5)] < 3e-4
    assert curve.eventually_decreasing()
    assert all(math.isfinite(c) for c in curve.values)
    assert [row["m"] for row in curve.rows()] == grid


def test_c_of_m_domain():
    with pytest.raises(ValueError):
        c_of_m(3.0, 3, 2.0)
    with pytest.raises(ValueError):
        c_of_m(10.0, 3, 1.0)
    assert hardy_target(4, 2.0) == pytest.approx(1.0)


def test_stirling_ratio():
    """Γ(50) 与 Stirling 近似之比约为 1 + 1/600"""
    ratio = stirling_ratio(50.0)
    assert abs(ratio - 1.0) < 2e-3
    assert ratio == pytest.approx(math.exp(1.0 / 600.0 - 1.0 / (360.0 * 50.0**3)), rel=1e-8)
    with pytest.raises(ValueError):
        stirling_ratio(0.0)


def test_weighted_limit_stays_below_energy():
    w = polynomial_profile(2.0, 1.0, 2.0)
    curve = weighted_limit_check(w, [10.0, 30.0, 100.0, 300.0], 3, 2.0)
    energy = curve.energies[0]
    assert all(v <= energy * (1.0 + 1e-8) for v in curve.values)
    assert curve.target < energy
    assert curve.gaps[-1] < curve.gaps[0]


def test_weighted_limit_of_zero_function():
    zero = RadialFunction(lambda t: np.zeros_like(t), lambda t: np.zeros_like(t), support=1.0, name="zero")
    curve = weighted_limit_check(zero, [10.0, 100.0], 3, 2.0)
    assert curve.values == [0.0, 0.0]
    assert curve.gaps == [0.0, 0.0]


def test_dimension_identities_hold():
    params = ProblemParams(N=3, p=2.0, s=0.0, R=1.0)
    reports = verify_S_another(5, 3, 2.0, truncated_bubble(1.0, 1.0, params))
    assert [r.identity for r in reports] == ["gradient", "norm"]
    assert max(r.residual for r in reports) <= 1e-6
