"""测试径向变量替换与范数恒等式"""

import math

import numpy as np
import pytest

from hardy_sobolev.funcspace import (
    RadialFunction,
    eval_U,
    eval_W,
    polynomial_profile,
    radial_suite,
    separable,
    truncated_bubble,
)
from hardy_sobolev.functionals import DivergenceError
from hardy_sobolev.params import validate
from hardy_sobolev.transforms import (
    gamma_alpha,
    identity_prefactor,
    lp_operator_energy,
    make_map,
    pullback,
    pushforward,
    verify_norm_identity,
    verify_operator_identity,
)

TOL = 1e-6


@pytest.mark.parametrize("kind,T", [("ioku", 2.0), ("ioku", math.inf), ("hk", math.inf)])
@pytest.mark.parametrize("identity", ["gradient", "norm"])
def test_ball_identities(kind, T, identity):
    """ioku 与 hk 映射的梯度、范数恒等式在径向测试函数上成立"""
    tmap = make_map(kind, 3, 2.0, 1.0, T)
    for u in radial_suite(1.0)[:3]:
        report = verify_norm_identity(tmap, u, identity, weight=1.0)
        assert report.residual <= TOL, report


@pytest.mark.parametrize("identity", ["gradient", "norm"])
def test_st_identities(identity):
    """p = N 的 st 映射，N = 2 搬到 m = 3"""
    tmap = make_map("st", 2, 2.0, 1.0, m=3)
    for u in radial_suite(1.0)[:3]:
        report = verify_norm_identity(tmap, u, identity, weight=0.5)
        assert report.residual <= TOL, report


@pytest.mark.parametrize("identity", ["gradient", "norm"])
def test_dim_identities(identity):
    """截断气泡从 R^3 搬到 R^5"""
    tmap = make_map("dim", 3, 2.0, m=5)
    params = validate({"N": 3, "p": 2})
    for lam in (0.5, 1.0, 2.0):
        report = verify_norm_identity(tmap, truncated_bubble(lam, 1.0, params), identity)
        assert report.residual <= TOL, report


def test_dim_gradient_prefactor_ratio():
    """两侧数值之比就是印出的常数"""
    tmap = make_map("dim", 3, 2.0, m=5)
    report = verify_norm_identity(tmap, truncated_bubble(1.0, 1.0, validate({"N": 3, "p": 2})), "gradient")
    expected = (4.0 * math.pi**2 / 3.0 * 2.0) / (4.0 * math.pi) * 3.0
    assert identity_prefactor(tmap, "gradient") == pytest.approx(expected, rel=1e-12)
    assert report.lhs / (report.rhs / report.prefactor) == pytest.approx(expected, rel=1e-6)


def test_zero_function_gives_zero_report():
    tmap = make_map("hk", 3, 2.0)
    zero = RadialFunction(lambda r: 0.0 * r, lambda r: 0.0 * r, support=1.0, name="zero")
    report = verify_norm_identity(tmap, zero, "norm")
    assert report.lhs == report.rhs == 0.0
    assert report.residual == 0.0


def test_forward_inverse_consistency():
    """forward 与 inverse 互逆，jacobian 与数值导数一致"""
    r = np.array([0.1, 0.4, 0.7, 0.95])
    for tmap in (make_map("ioku", 3, 2.0, 1.0, 3.0), make_map("hk", 4, 2.0), make_map("dim", 3, 2.0, m=6)):
        t = tmap.forward(r)
        np.testing.assert_allclose(tmap.inverse(t), r, rtol=1e-12)
        h = 1e-6
        numeric = 2.0 * h / (tmap.forward(r + h) - tmap.forward(r - h))
        np.testing.assert_allclose(tmap.jacobian(r), numeric, rtol=1e-6)


def test_pullback_undoes_pushforward():
    tmap = make_map("ioku", 3, 2.0, 1.0, 2.0)
    u = polynomial_profile(2.0, 1.0)
    w = pullback(tmap, u)
    back = pushforward(tmap, w)
    r = np.array([0.2, 0.5, 0.8])
    np.testing.assert_allclose(back(r), u(r), rtol=1e-12)
    np.testing.assert_allclose(back.derivative(r), u.derivative(r), rtol=1e-10)


def test_prefactors():
    """ioku 为 1；N = 3, p = 2 的 hk 两个因子都是 1"""
    assert identity_prefactor(make_map("ioku", 3, 2.0), "norm") == 1.0
    hk = make_map("hk", 3, 2.0)
    assert identity_prefactor(hk, "gradient") == pytest.approx(1.0)
    assert identity_prefactor(hk, "norm") == pytest.approx(1.0)
    assert identity_prefactor(make_map("hk", 4, 2.0), "gradient") == pytest.approx(2.0)
    with pytest.raises(ValueError):
        identity_prefactor(hk, "operator")


def test_gamma_alpha():
    assert gamma_alpha(3, 2, 0.5) == pytest.approx((4.0 - 0.5) / 1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "st", "N": 3, "p": 2.0, "m": 5},
        {"kind": "st", "N": 2, "p": 2.0, "m": 2},
        {"kind": "dim", "N": 3, "p": 2.0, "m": 3},
        {"kind": "ioku", "N": 3, "p": 2.0, "R": 2.0, "T": 1.0},
        {"kind": "cayley", "N": 3, "p": 2.0},
        {"kind": "hk", "N": 3, "p": 3.0},
    ],
)
def test_make_map_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        make_map(**kwargs)


def test_map_domain_checked():
    tmap = make_map("ioku", 3, 2.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        tmap.forward(1.0)
    with pytest.raises(ValueError):
        tmap.inverse(2.5)


def _dipole(radius):
    return separable(
        lambda t: (t / radius) * (1.0 - (t / radius) ** 2) ** 2,
        lambda t: (1.0 - (t / radius) ** 2) * (1.0 - 5.0 * (t / radius) ** 2) / radius,
        np.cos,
        lambda th: -np.sin(th),
        radius,
        name="dipole",
    )


def test_operator_identity():
    """∫_(B_T)|∇w|^p = ∫_(B_R)|L_p u|^p，u 为 w 的拉回"""
    tmap = make_map("ioku", 3, 2.0, 1.0, 2.0)
    report = verify_operator_identity(tmap, _dipole(2.0))
    assert report.residual <= TOL, report


def test_operator_energy_diverges_at_full_potential():
    """a = 1 且角向导数在边界不消失时 L_p 能量发散"""
    params = validate({"N": 3, "p": 2, "a": 1.0})
    w = separable(
        lambda t: np.sqrt(1.0 - t), lambda t: -0.5 / np.sqrt(1.0 - t), np.cos, lambda th: -np.sin(th), 1.0
    )
    with pytest.raises(DivergenceError):
        lp_operator_energy(w, params)


@pytest.mark.parametrize(
    "tmap",
    [
        make_map("ioku", 3, 2.0, 1.0, 3.0),
        make_map("ioku", 4, 2.5, 1.0),
        make_map("hk", 3, 2.0),
        make_map("st", 2, 2.0, 1.0, m=4),
        make_map("dim", 3, 2.0, m=6),
    ],
    ids=lambda tmap: tmap.kind,
)
def test_jacobian_matches_inverse_derivative(tmap):
    """jacobian(r) = dr/dt，与 inverse 的中心差分在 50 个点上一致"""
    r = np.linspace(0.02, 0.98, 50)
    t = tmap.forward(r)
    h = 1e-6 * t
    numeric = (tmap.inverse(t + h) - tmap.inverse(t - h)) / (2.0 * h)
    np.testing.assert_allclose(tmap.jacobian(r), numeric, rtol=1e-6)


def test_ioku_with_equal_radii_is_identity():
    tmap = make_map("ioku", 3, 2.0, 1.5, 1.5)
    assert tmap.a == 0.0
    r = np.linspace(0.0, 1.4, 15)
    np.testing.assert_allclose(tmap.forward(r[1:]), r[1:], rtol=1e-14)
    np.testing.assert_allclose(tmap.inverse(r[1:]), r[1:], rtol=1e-14)
    np.testing.assert_allclose(tmap.jacobian(r), 1.0, rtol=1e-14)


@pytest.mark.parametrize("R", [1.0, 2.0])
def test_transported_extremal_is_ioku_pullback(R):
    """U^λ(r) = W_λ(t(r))，t 为 T = ∞ 的 Ioku 映射"""
    params = validate({"N": 3, "p": 2, "s": 1, "R": R})
    tmap = make_map("ioku", 3, 2.0, R)
    r = np.linspace(0.01, 0.99, 20) * R
    for lam in (0.5, 2.0):
        np.testing.assert_allclose(eval_U(lam, r, params), eval_W(lam, tmap.forward(r), params), rtol=1e-10)
