"""测试径向梯度流、试验函数族搜索与各类扫描"""

import math

import numpy as np
import pytest

from hardy_sobolev.funcspace import radial_suite
from hardy_sobolev.minimize import (
    RadialDiscretization,
    best_trial_quotient,
    break_scan,
    concentration_curve,
    decay_fit,
    estimate_a_star_upper,
    hardy_sequence,
    minimize_radial,
    monotonicity_scan,
)
from hardy_sobolev.params import threshold_A, validate

C_321 = 2.0 * math.sqrt(2.0 * math.pi / 3.0)
C_320 = 3.0 * (math.pi / 2.0) ** (4.0 / 3.0)


@pytest.fixture
def p321():
    return validate({"N": 3, "p": 2, "s": 1})


def test_discrete_gradient_matches_finite_differences(p321):
    disc = RadialDiscretization.build(p321.with_a(0.5), n_nodes=24)
    nodes = disc.nodes[1:-1]
    v = (1.0 - nodes) * (1.0 + nodes)
    grad = disc.quotient_grad(v)
    h = 1e-6
    for i in (0, 5, 12, disc.size - 1):
        step = np.zeros_like(v)
        step[i] = h
        fd = (disc.quotient(v + step) - disc.quotient(v - step)) / (2.0 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_discretization_rejects_tiny_grid(p321):
    with pytest.raises(ValueError):
        RadialDiscretization.build(p321, n_nodes=3)


def test_gradient_flow_trace_is_monotone(p321):
    result = minimize_radial(p321.with_a(0.5), n_nodes=200, steps=200, certify=False)
    assert all(b <= a for a, b in zip(result.trace, result.trace[1:]))
    assert result.trace[-1] < result.trace[0]
    assert result.values[-1] == 0.0
    assert len(result.nodes) == len(result.values)
    assert not result.certified


def test_gradient_flow_reaches_constant_at_a_one(p321):
    """a = 1 时径向梯度流收敛到 C_(3,2,1)，认证值在 1% 内"""
    result = minimize_radial(p321.with_a(1.0), n_nodes=400, steps=3000)
    assert result.certified
    assert result.quotient == pytest.approx(C_321, rel=1e-2)


def test_extremal_start_is_already_close(p321):
    result = minimize_radial(p321.with_a(1.0), n_nodes=400, steps=50, initial="extremal", certify=False)
    assert result.trace[0] == pytest.approx(C_321, rel=1e-2)


def test_unknown_initial_rejected(p321):
    with pytest.raises(ValueError):
        minimize_radial(p321, n_nodes=50, steps=5, initial="random")


def test_boundary_bump_search_at_s_zero():
    """s = 0、a = 0.5 时最优试验商落在 C_(3,2,0) 0.5^(4/3) 之上的预算区间内"""
    params = validate({"N": 3, "p": 2, "s": 0, "a": 0.5})
    result = best_trial_quotient(params, "boundary-bump")
    lower = C_320 * 0.5 ** (4.0 / 3.0)
    assert lower * (1.0 - 1e-3) <= result.quotient <= 2.39
    assert result.certified
    assert result.family == "boundary-bump"


def test_a_star_witness_near_one(p321):
    report = estimate_a_star_upper(p321, [0.99], margin=1e-3)
    assert report.a_hat == 0.99
    assert threshold_A(p321) < report.a_hat < 1.0
    assert report.witness is not None
    assert report.witness.quotient <= 0.99 * C_321
    assert report.rows[0].below_radial


def test_a_star_grid_must_exceed_rearrangement_threshold(p321):
    with pytest.raises(ValueError):
        estimate_a_star_upper(p321, [0.1, 0.2, 0.25])
    with pytest.raises(ValueError):
        estimate_a_star_upper(validate({"N": 3, "p": 2, "s": 0}), [0.9])


@pytest.mark.parametrize("s, expected", [(1, 1.0), (0, 4.0 / 3.0)])
def test_decay_slope_at_a_one(s, expected):
    params = validate({"N": 3, "p": 2, "s": s, "a": 1.0})
    fit = decay_fit(params)
    assert fit.expected == pytest.approx(expected)
    assert abs(fit.slope - expected) <= 0.05
    assert fit.strictly_decreasing


def test_decay_fit_preconditions(p321):
    with pytest.raises(ValueError):
        decay_fit(p321.with_a(0.5))
    with pytest.raises(ValueError):
        decay_fit(p321.with_a(1.0), k_values=[3, 4])


def test_quotient_non_increasing_in_a(p321):
    report = monotonicity_scan(radial_suite(1.0), p321, [0.75, 0.0, 0.5, 0.25])
    assert report.a_grid == [0.0, 0.25, 0.5, 0.75]
    assert all(row.non_increasing for row in report.rows)
    assert report.minimum_non_increasing


def test_interior_concentration_blows_up(p321):
    rows = concentration_curve(p321.with_a(0.5), 0.5, [0.2, 0.1, 0.05])
    values = [q for _, q in rows]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_hardy_sequence_approaches_constant():
    """截断幂的商：γ = 0.495 时闭式值约为 0.2525"""
    params = validate({"N": 3, "p": 2, "s": 2})
    rows = hardy_sequence(params, [0.3, 0.45, 0.495])
    values = [q for _, q in rows]
    gamma = 0.495
    exact = (gamma**2 / (1 - 2 * gamma)) / (1 / (1 - 2 * gamma) - 2 / (1 - gamma) + 1)
    assert values[-1] == pytest.approx(exact, rel=1e-5)
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] > 0.25


def _a_hat_or_inf(report):
    return math.inf if report.a_hat is None else report.a_hat


def test_doubling_budget_never_raises_a_star_bound(p321):
    """预算加倍时各 a 的最优试验商不升，â 不增"""
    grid = [0.9, 0.99]
    small = estimate_a_star_upper(p321, grid, budget=60, max_starts=2)
    large = estimate_a_star_upper(p321, grid, budget=120, max_starts=2)
    assert _a_hat_or_inf(large) <= _a_hat_or_inf(small)
    for before, after in zip(small.rows, large.rows):
        assert after.best_quotient <= before.best_quotient * (1.0 + 1e-6)


def test_no_trial_beats_radial_level_below_threshold(p321):
    """a ≤ s(p-1)/(p(N-1)) = 1/4 时没有试验函数低于 C_(3,2,1) - 1e-3"""
    rows, _ = break_scan(p321, [0.1, 0.2, 0.25], budget=80, max_starts=3, margin=1e-3)
    assert [row.a for row in rows] == [0.1, 0.2, 0.25]
    for row in rows:
        assert not row.below_radial
        assert row.best_quotient >= C_321 - 1e-3


def test_scan_independent_of_thread_count(p321):
    grid = [0.99, 0.6, 0.9]
    serial, _ = break_scan(p321, grid, budget=40, max_starts=2, threads=1)
    threaded, _ = break_scan(p321, grid, budget=40, max_starts=2, threads=4)
    assert [row.model_dump() for row in serial] == [row.model_dump() for row in threaded]
    assert [row.a for row in serial] == [0.6, 0.9, 0.99]
