from fractions import Fraction

import numpy as np
import pytest
import sympy as sy
from hypothesis import given, settings, strategies as st

from vdns.mms import (case_ex41, case_ex42, case_stokes, derivative_mismatch,
                      forcing_residual_check, get_case, max_divergence, sample_points)

X, Y, T = sy.symbols("x y t", real=True)
MU = sy.Rational(7, 5)


def symbolic_fields(name):
    if name == "ex41":
        s = 2 + X * (X - 1) * sy.cos(sy.sin(T)) + Y * (Y - 1) * sy.sin(sy.sin(T))
        u = (T ** 3 * Y ** 2 * (Y - 1), T ** 3 * X ** 2 * (X - 1))
        p = T * X + Y - (T + 1) / 2
    else:
        s = 2 + X * (1 - X) * sy.cos(sy.sin(T)) + Y * (1 - Y) * sy.sin(sy.sin(T))
        u = (10 * X ** 2 * (X - 1) ** 2 * Y * (Y - 1) * (2 * Y - 1) * sy.cos(T),
             -10 * X * (X - 1) * (2 * X - 1) * Y ** 2 * (Y - 1) ** 2 * sy.cos(T))
        p = sy.sin(X) * sy.sin(Y) * sy.sin(T)
    return s, u, p


def symbolic_forcings(name, mu):
    s, u, p = symbolic_fields(name)
    rho = s ** 2
    div_u = sy.diff(u[0], X) + sy.diff(u[1], Y)
    g = sy.diff(s, T) + u[0] * sy.diff(s, X) + u[1] * sy.diff(s, Y) + s * div_u / 2
    div_rho_u = sy.diff(rho * u[0], X) + sy.diff(rho * u[1], Y)
    f = []
    for c, var in enumerate((X, Y)):
        conv = u[0] * sy.diff(u[c], X) + u[1] * sy.diff(u[c], Y)
        lap = sy.diff(u[c], X, 2) + sy.diff(u[c], Y, 2)
        f.append(s * sy.diff(s * u[c], T) + rho * conv + u[c] * div_rho_u / 2
                 - mu * lap + sy.diff(p, var))
    return sy.lambdify((X, Y, T), g, "numpy"), sy.lambdify((X, Y, T), f, "numpy")


@pytest.mark.parametrize("name", ["ex41", "ex42"])
def test_forcings_match_symbolic_derivation(name):
    case = get_case(name, float(MU))
    g_ref, f_ref = symbolic_forcings(name, MU)
    pts = np.random.default_rng(7).random((200, 3))
    x, y, t = pts[:, 0], pts[:, 1], pts[:, 2] * case.final_time
    g = case.g(x, y, t)
    np.testing.assert_allclose(g, g_ref(x, y, t), rtol=1e-12, atol=1e-12)
    f = case.f(x, y, t)
    fr = np.stack(np.broadcast_arrays(*f_ref(x, y, t)), axis=-1)
    np.testing.assert_allclose(f, fr, rtol=1e-12, atol=1e-12 * np.abs(fr).max())


@pytest.mark.parametrize("name", ["ex41", "ex42"])
def test_closed_forms_match_symbolic(name):
    case = get_case(name)
    s, u, p = symbolic_fields(name)
    pts = np.random.default_rng(3).random((50, 3))
    x, y, t = pts.T
    np.testing.assert_allclose(case.sigma(x, y, t), sy.lambdify((X, Y, T), s)(x, y, t), rtol=1e-14)
    uu = np.stack([np.broadcast_to(sy.lambdify((X, Y, T), c)(x, y, t), x.shape) for c in u], -1)
    np.testing.assert_allclose(case.u(x, y, t), uu, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(case.p(x, y, t), sy.lambdify((X, Y, T), p)(x, y, t), atol=1e-15)


def test_ex41_sigma_value():
    assert case_ex41().sigma(0.5, 0.5, 0.0) == 1.75


def test_ex41_velocity_zero_at_start():
    pts = sample_points(50)
    np.testing.assert_array_equal(case_ex41().u(pts[:, 0], pts[:, 1], 0.0), 0.0)


def test_ex42_velocity_pinned_value():
    x, y = Fraction(1, 2), Fraction(1, 4)
    u1 = 10 * x ** 2 * (x - 1) ** 2 * y * (y - 1) * (2 * y - 1)
    assert u1 == Fraction(15, 256)
    assert case_ex42().u(0.5, 0.25, 0.0)[0] == pytest.approx(float(u1), rel=1e-15)


@given(st.floats(0, 1), st.floats(0, 3))
@settings(max_examples=40, deadline=None)
def test_ex42_velocity_vanishes_on_boundary(s, t):
    case = case_ex42()
    for x, y in ((s, 0.0), (s, 1.0), (0.0, s), (1.0, s)):
        np.testing.assert_allclose(case.u(x, y, t), 0.0, atol=1e-15)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.7])
def test_ex41_pressure_zero_mean(t):
    # bilinear in x, y: the midpoint value is the mean over the unit square
    case = case_ex41()
    g = (np.arange(200) + 0.5) / 200
    xx, yy = np.meshgrid(g, g)
    assert abs(case.p(xx, yy, t).mean()) < 1e-14


def test_ex41_density_bounds_on_t_in_0_T():
    case = case_ex41()
    g = np.linspace(0, 1, 41)
    xx, yy = np.meshgrid(g, g)
    for t in np.linspace(0, case.final_time, 11):
        s = case.sigma(xx, yy, t)
        assert s.min() >= 1.5 - 1e-15 and s.max() <= 2.0 + 1e-15


@pytest.mark.parametrize("name", ["ex41", "ex42", "stokes"])
def test_forcing_residual_small(name):
    assert forcing_residual_check(get_case(name)) <= 1e-12


@pytest.mark.parametrize("name", ["ex41", "ex42"])
def test_forcing_check_detects_corruption(name):
    assert forcing_residual_check(get_case(name).with_forcing_scaled(1.01)) > 1e-4


@pytest.mark.parametrize("name", ["ex41", "ex42", "stokes"])
def test_derivatives_match_finite_differences(name):
    mism = derivative_mismatch(get_case(name))
    assert max(mism.values()) <= 1e-7, mism


def test_dt_sigma_fd_at_fixed_point():
    case = case_ex41()
    h = 1e-5
    fd = (case.sigma(0.3, 0.7, 0.2 + h) - case.sigma(0.3, 0.7, 0.2 - h)) / (2 * h)
    assert abs(case.sigma.dt(0.3, 0.7, 0.2) - fd) <= 1e-7


@pytest.mark.parametrize("name", ["ex41", "ex42", "stokes"])
def test_divergence_free(name):
    assert max_divergence(get_case(name)) <= 1e-13


def test_unknown_case():
    with pytest.raises(ValueError, match="unknown case"):
        get_case("ex99")


def test_stokes_case_is_steady_with_unit_density():
    case = case_stokes(2.0)
    assert case.steady and case.mu == 2.0
    np.testing.assert_array_equal(case.sigma(np.zeros(3), np.ones(3), 0.0), 1.0)
