"""测试参数校验与闭式常数"""

import math

import pytest

from hardy_sobolev.params import (
    ProblemParams,
    T_from_a,
    a_from_T,
    beta,
    critical_radius,
    derived_constants,
    hardy_const,
    hardy_sobolev_constant,
    hardy_sobolev_level,
    p_star,
    potential_minimum,
    rearrange_threshold,
    s0_level,
    sobolev_constant,
    threshold_A,
    validate,
    weighted_sobolev_level,
)


@pytest.fixture
def p321():
    return validate({"N": 3, "p": 2, "s": 1})


def test_derived_values(p321):
    """(N, p, s) = (3, 2, 1) 的闭式量"""
    assert beta(p321) == pytest.approx(3.0)
    assert p_star(p321) == pytest.approx(4.0)
    assert rearrange_threshold(p321) == pytest.approx(0.25)
    assert hardy_const(p321) == pytest.approx(0.25)
    assert p321.k == pytest.approx(1.0)


def test_threshold_A(p321):
    """A ≈ 0.52753，且落在 (τ, 1) 内"""
    A = threshold_A(p321)
    assert A == pytest.approx(0.52753, abs=1e-5)
    assert rearrange_threshold(p321) < A < 1.0


def test_threshold_A_general_k():
    """k ≠ 1 时闭式与二分法一致（threshold_A 内部比对，偏差过大会抛错）"""
    params = validate({"N": 4, "p": 2, "s": 1})
    A = threshold_A(params)
    assert rearrange_threshold(params) < A < 1.0


def test_threshold_A_undefined():
    with pytest.raises(ValueError):
        threshold_A(validate({"N": 3, "p": 2, "s": 0}))
    with pytest.raises(ValueError):
        threshold_A(validate({"N": 3, "p": 2, "s": 2}))


def test_critical_radius_matches_minimum(p321):
    """黄金分割找到的 V_a 最小点与临界半径公式一致"""
    for a in (0.3, 0.5, 0.9):
        params = p321.with_a(a)
        assert potential_minimum(params) == pytest.approx(critical_radius(params), rel=1e-6)
    assert critical_radius(p321.with_a(1.0)) == pytest.approx(0.25)


def test_potential_minimum_requires_interior(p321):
    with pytest.raises(ValueError):
        potential_minimum(p321.with_a(0.2))


def test_sobolev_constant_value():
    """C_(3,2,0) = 3 (π/2)^(4/3)"""
    assert sobolev_constant(3, 2) == pytest.approx(3.0 * (math.pi / 2.0) ** (4.0 / 3.0), rel=1e-12)


def test_hardy_sobolev_constant(p321):
    """W_1 的商：(3,2,1) 时为 2√(2π/3)；s = 0 时回到 Sobolev 常数"""
    assert hardy_sobolev_constant(p321) == pytest.approx(2.0 * math.sqrt(2.0 * math.pi / 3.0), rel=1e-7)
    assert hardy_sobolev_constant(validate({"N": 3, "p": 2})) == pytest.approx(sobolev_constant(3, 2), rel=1e-7)
    assert hardy_sobolev_constant(validate({"N": 3, "p": 2, "s": 2})) == pytest.approx(0.25)


def test_hardy_sobolev_level_carries_error(p321):
    """误差来自两个尾积分，覆盖与精确值的偏差；s = p 时为零"""
    exact = 2.0 * math.sqrt(2.0 * math.pi / 3.0)
    level = hardy_sobolev_level(p321)
    assert level.value == hardy_sobolev_constant(p321)
    assert 0.0 <= level.error < 1e-6 * exact
    assert abs(level.value - exact) <= 10.0 * level.error + 1e-10 * exact
    assert level.panels > 0
    closed = hardy_sobolev_level(validate({"N": 3, "p": 2, "s": 2}))
    assert (closed.value, closed.error) == (0.25, 0.0)


def test_s0_level():
    """s = 0、a = 0.5 时 I_a = C_(3,2,0) 0.5^(4/3) ≈ 2.174"""
    params = validate({"N": 3, "p": 2, "a": 0.5})
    assert s0_level(params) == pytest.approx(2.1741, abs=1e-3)
    assert weighted_sobolev_level(1.0, 3, 2) == pytest.approx(sobolev_constant(3, 2))


def test_a_and_T_roundtrip():
    params = validate({"N": 3, "p": 2, "R": 1.0, "T": 4.0})
    assert a_from_T(params) == pytest.approx(0.75)
    assert T_from_a(validate({"N": 3, "p": 2, "a": 0.75})) == pytest.approx(4.0)
    assert T_from_a(validate({"N": 3, "p": 2, "a": 1.0})) == math.inf


@pytest.mark.parametrize(
    "raw,constraint",
    [
        ({"N": 3, "p": 5}, "p < N"),
        ({"N": 1, "p": 0.5}, "N ≥ 2"),
        ({"N": 3, "p": 1}, "1 < p"),
        ({"N": 3, "p": 2, "s": 3}, "s ≤ p"),
        ({"N": 3, "p": 2, "a": 1.5}, "a ≤ 1"),
        ({"N": 3, "p": 2, "R": 2, "T": 1}, "T ≥ R"),
    ],
)
def test_validation_names_constraint(raw, constraint):
    """非法参数的报错信息指明被违反的约束"""
    with pytest.raises(ValueError, match=constraint):
        validate(raw)


def test_params_are_frozen(p321):
    with pytest.raises(Exception):
        p321.a = 0.5
    assert isinstance(p321, ProblemParams)


def test_derived_constants_summary(p321):
    data = derived_constants(p321.with_a(0.5))
    assert data["A"] == pytest.approx(0.52753, abs=1e-5)
    assert data["R_a"] == pytest.approx(0.5)
    assert derived_constants(validate({"N": 3, "p": 2}))["A"] is None
