"""测试试验函数的构造"""

import math

import numpy as np
import pytest
from scipy import integrate

from hardy_sobolev.funcspace import (
    FAMILY_NAMES,
    U_family,
    W_family,
    as_axisym,
    boundary_bump,
    eval_U,
    grid_function,
    load_grid_csv,
    polynomial_profile,
    profile_bump,
    radial_suite,
    save_grid_csv,
    separable,
    spherical_average,
    trial_family,
    truncated_power,
)
from hardy_sobolev.params import validate
from hardy_sobolev.quadrature import integrate_axisym, integrate_radial, sphere_area


@pytest.fixture
def p321():
    return validate({"N": 3, "p": 2, "s": 1})


def test_W_closed_form(p321):
    """(3,2,1) 时 W_λ(t) = λ^(1/2) / (1 + λt)"""
    w = W_family(2.0, p321)
    t = np.array([0.0, 0.5, 3.0])
    np.testing.assert_allclose(w(t), math.sqrt(2.0) / (1.0 + 2.0 * t))
    np.testing.assert_allclose(w.derivative(t), -(2.0**1.5) / (1.0 + 2.0 * t) ** 2)


def test_U_is_transported_W(p321):
    """U^λ(r) = W_λ(r / (1 - r/R))，k = 1；r ≥ R 时报错"""
    r = np.array([0.1, 0.5, 0.9])
    np.testing.assert_allclose(eval_U(1.0, r, p321), 1.0 / (1.0 + r / (1.0 - r)))
    u = U_family(1.0, p321)
    assert u(1.0) == 0.0
    with pytest.raises(ValueError):
        eval_U(1.0, 1.0, p321)


def test_extremal_families_need_subcritical_s():
    with pytest.raises(ValueError):
        W_family(1.0, validate({"N": 3, "p": 2, "s": 2}))


def test_truncated_power_range(p321):
    u = truncated_power(0.3, p321)
    assert u(1.0) == 0.0
    assert u(0.5) == pytest.approx(0.5**-0.3 - 1.0)
    with pytest.raises(ValueError):
        truncated_power(0.5, p321)


def test_radial_suite_has_zero_trace():
    for u in radial_suite(2.0):
        assert u(np.array([1.999999]))[0] == pytest.approx(0.0, abs=1e-5)
        assert u(np.array([0.0]))[0] == pytest.approx(1.0)


def test_grid_function_linear_and_pchip():
    """线性插值在首节点以内取常数；pchip 复现光滑函数"""
    nodes = np.linspace(0.05, 1.0, 200)
    u = polynomial_profile(2.0, 1.0)
    values = u(nodes)
    linear = grid_function(nodes, values, "linear")
    assert linear(0.01) == pytest.approx(values[0])
    assert linear.derivative(0.01) == 0.0
    smooth = grid_function(nodes, values, "pchip")
    r = np.array([0.3, 0.6, 0.9])
    np.testing.assert_allclose(smooth(r), 1.0 - r**2, atol=1e-5)
    np.testing.assert_allclose(smooth.derivative(r), -2.0 * r, atol=1e-3)
    with pytest.raises(ValueError):
        grid_function(nodes, values, "cubic")
    with pytest.raises(ValueError):
        grid_function(nodes[::-1], values)


def test_grid_csv_roundtrip(tmp_path):
    """CSV 保存后读回节点、取值与加密指数"""
    path = tmp_path / "grid.csv"
    nodes = np.array([0.1, 0.5, 1.0])
    values = np.array([1.0, 0.75, 0.0])
    save_grid_csv(path, nodes, values, 3.0)
    loaded_nodes, loaded_values, grading = load_grid_csv(path)
    np.testing.assert_array_equal(loaded_nodes, nodes)
    np.testing.assert_array_equal(loaded_values, values)
    assert grading == 3.0


def test_load_grid_requires_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("node,value\n0.1,1.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_grid_csv(path)


def test_boundary_bump_geometry(p321):
    """凸包球心在 R - 2ε，球外为零，锥形剖面在内半球上为 1"""
    u = boundary_bump(0.1, p321)
    assert u.support.center == pytest.approx(0.8)
    assert u(0.8, 0.0) == pytest.approx(1.0)
    assert u(0.8, 1.0) == 0.0
    assert u(0.84, 0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        boundary_bump(0.3, p321)
    with pytest.raises(ValueError):
        profile_bump(0.2, 0.9, p321)


def test_bubble_profile_requires_mu(p321):
    with pytest.raises(ValueError):
        profile_bump(0.1, 0.5, p321, "bubble")
    u = profile_bump(0.1, 0.5, p321, "bubble", 0.2)
    assert u(0.5, 0.0) == pytest.approx(1.0)


def test_spherical_average_of_radial_function():
    """径向函数的球面平均是它自己"""
    u = polynomial_profile(2.0, 1.0)
    avg = spherical_average(as_axisym(u), 4.0, 3)
    r = np.array([0.2, 0.5, 0.8])
    np.testing.assert_allclose(avg(r), u(r), rtol=1e-10)
    np.testing.assert_allclose(avg.derivative(r), u.derivative(r), rtol=1e-8)


def test_trial_family_starts_and_codec(p321):
    """每个族有确定性起点；encode 是 decode 的逆"""
    for name in FAMILY_NAMES:
        family = trial_family(name, p321, 1e-3)
        assert family.starts
        assert all(len(z) == family.dimension for z in family.starts)
        natural = family.decode(family.starts[0])
        back = family.decode(family.encode(natural))
        for key, value in natural.items():
            assert back[key] == pytest.approx(value, rel=1e-9)
    assert len(trial_family("boundary-bump", p321, 1e-3).starts) == 8


def test_trial_family_rejects_bad_input(p321):
    with pytest.raises(ValueError):
        trial_family("gaussian", p321, 1e-3)
    with pytest.raises(ValueError):
        trial_family("bubble", p321, 0.5)
    with pytest.raises(ValueError):
        trial_family("transported-extremal", validate({"N": 3, "p": 2, "s": 2}), 1e-3)


def test_decoded_members_stay_in_ball(p321):
    """任意无约束坐标解码后的成员支集都在 B_R 内"""
    family = trial_family("bubble", p321, 1e-3)
    for z in [(-30.0, 30.0, 0.0), (30.0, -30.0, 5.0), (0.0, 0.0, -5.0)]:
        natural = family.decode(z)
        assert natural["center"] + natural["eps"] <= p321.R * (1.0 + 1e-12)
        family.build(natural)


SEPARABLE_CASES = [
    (0.0, 0.5, 0.0),
    (0.5, 0.3, 0.2),
    (1.0, -0.4, 0.1),
    (0.2, 0.0, 0.6),
    (2.0, 0.6, -0.3),
    (0.0, -0.7, 0.0),
    (1.5, 0.2, 0.5),
]


def _separable_case(b, a1, a2):
    """g(r) = (1 - r²)²(1 + b r²)，h(θ) = 1 + a1 cos θ + a2 cos² θ > 0"""

    def g(r):
        return (1.0 - r * r) ** 2 * (1.0 + b * r * r)

    def dg(r):
        return -4.0 * r * (1.0 - r * r) * (1.0 + b * r * r) + 2.0 * b * r * (1.0 - r * r) ** 2

    def h(t):
        return 1.0 + a1 * np.cos(t) + a2 * np.cos(t) ** 2

    def dh(t):
        return -np.sin(t) * (a1 + 2.0 * a2 * np.cos(t))

    return separable(g, dg, h, dh, 1.0, f"sep({b:g},{a1:g},{a2:g})"), g, h


def _axisym_suite(params):
    suite = [_separable_case(*case)[0] for case in SEPARABLE_CASES]
    suite.append(profile_bump(0.2, 0.5, params, "smooth"))
    suite.append(profile_bump(0.2, 0.5, params, "bubble", 0.2))
    suite.append(profile_bump(0.3, 0.6, params, "smooth"))
    return suite


def _weight(r):
    return 1.0 / (1.0 + r * r)


@pytest.mark.parametrize("q", [2.0, 3.0])
def test_separable_spherical_average_matches_closed_form(q):
    """w = g(r) h(θ) 时 W(r) = g(r) · (平均 |h|^q)^(1/q)"""
    r = np.array([0.1, 0.35, 0.6, 0.9])
    for case in SEPARABLE_CASES:
        w, g, h = _separable_case(*case)
        mean = 0.5 * integrate.quad(lambda t: abs(h(t)) ** q * math.sin(t), 0.0, math.pi, epsabs=1e-14)[0]
        avg = spherical_average(w, q, 3)
        np.testing.assert_allclose(avg(r), g(r) * mean ** (1.0 / q), rtol=1e-10)


@pytest.mark.parametrize("q", [2.0, 3.0])
def test_spherical_average_preserves_weighted_norm(p321, q):
    """对径向权 f，∫ W^q f dx = ∫ |w|^q f dx"""
    for w in _axisym_suite(p321):
        avg = spherical_average(w, q, 3)
        radial = integrate_radial(
            lambda r: sphere_area(3) * r * r * _weight(r) * avg(r) ** q,
            lo=0.0,
            hi=avg.support,
            breaks=avg.breaks,
        ).value
        direct = integrate_axisym(lambda r, t: np.abs(w(r, t)) ** q * _weight(r), 3, support=w.support).value
        assert radial == pytest.approx(direct, rel=1e-8), w.name


@pytest.mark.parametrize("q", [2.0, 3.0])
def test_spherical_average_does_not_increase_radial_energy(p321, q):
    """∫ |W'|^q dx ≤ ∫ |∂_r w|^q dx"""
    for w in _axisym_suite(p321):
        avg = spherical_average(w, q, 3)
        radial = integrate_radial(
            lambda r: sphere_area(3) * r * r * np.abs(avg.derivative(r)) ** q,
            lo=0.0,
            hi=avg.support,
            breaks=avg.breaks,
        ).value
        direct = integrate_axisym(lambda r, t: np.abs(w.grad_r(r, t)) ** q, 3, support=w.support).value
        assert radial <= direct * (1.0 + 1e-8), w.name


def test_off_center_average_vanishes_off_the_shell(p321):
    w = profile_bump(0.2, 0.5, p321, "smooth")
    avg = spherical_average(w, 2.0, 3)
    assert avg.support == pytest.approx(0.7)
    assert avg.breaks == pytest.approx((0.3,))
    np.testing.assert_array_equal(avg(np.array([0.0, 0.1, 0.29])), 0.0)
    assert float(avg(0.5)) > 0
