"""Manufactured solutions for the square-root-density formulation.

Each case bundles closed-form density root ``sigma``, velocity ``u`` and
pressure ``p`` together with hand-derived derivatives, and the forcings

    g = d_t sigma + u . grad sigma + sigma div(u) / 2
    f = sigma d_t(sigma u) + rho (u . grad) u + u div(rho u) / 2 - mu lap u + grad p

with ``rho = sigma**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .fem.space import AnalyticEvaluator


@dataclass(frozen=True)
class AnalyticCase:
    """Exact fields and forcings of one manufactured-solution experiment.

    ``boundary_trace`` is ``"homogeneous"`` when the exact velocity vanishes
    on the boundary and ``"interpolated-exact"`` when the discrete velocity
    must take the interpolated exact trace.
    """

    name: str
    mu: float
    sigma: AnalyticEvaluator
    u: AnalyticEvaluator
    p: AnalyticEvaluator
    lap_u: Optional[Callable] = None
    g: Optional[AnalyticEvaluator] = None
    f: Optional[AnalyticEvaluator] = None
    boundary_trace: str = "homogeneous"
    final_time: float = 1.0
    steady: bool = False

    @property
    def rho(self) -> AnalyticEvaluator:
        s = self.sigma
        return AnalyticEvaluator(lambda x, y, t: s(x, y, t) ** 2,
                                 lambda x, y, t: 2 * s(x, y, t)[..., None] * s.grad(x, y, t))

    def dt_sigma_u(self, x, y, t):
        """Time derivative of the momentum-like product sigma * u."""
        s = self.sigma(x, y, t)[..., None]
        return self.sigma.dt(x, y, t)[..., None] * self.u(x, y, t) + s * self.u.dt(x, y, t)

    def with_forcing_scaled(self, factor: float) -> "AnalyticCase":
        """Copy with ``g`` multiplied by ``factor`` (used to test the checks)."""
        g = self.g
        return replace(self, g=AnalyticEvaluator(lambda x, y, t: factor * g(x, y, t)))


def _stack(*components):
    return np.stack(np.broadcast_arrays(*components), axis=-1)


def _compose_forcings(sigma, u, p, lap_u, mu):
    def g(x, y, t):
        gs = sigma.grad(x, y, t)
        uu = u(x, y, t)
        div = np.trace(u.grad(x, y, t), axis1=-2, axis2=-1)
        return (sigma.dt(x, y, t) + np.sum(uu * gs, axis=-1)
                + 0.5 * sigma(x, y, t) * div)

    def f(x, y, t):
        s = sigma(x, y, t)
        gs = sigma.grad(x, y, t)
        uu = u(x, y, t)
        jac = u.grad(x, y, t)  # [..., component, derivative]
        div = np.trace(jac, axis1=-2, axis2=-1)
        rho = s ** 2
        dt_su = sigma.dt(x, y, t)[..., None] * uu + s[..., None] * u.dt(x, y, t)
        conv = np.einsum("...cd,...d->...c", jac, uu)
        div_rho_u = 2 * s * np.sum(uu * gs, axis=-1) + rho * div
        return (s[..., None] * dt_su + rho[..., None] * conv
                + 0.5 * uu * div_rho_u[..., None]
                - mu * lap_u(x, y, t) + p.grad(x, y, t))

    return AnalyticEvaluator(g), AnalyticEvaluator(f, ncomp=2)


def case_ex41(mu: float = 1.0) -> AnalyticCase:
    """Polynomial-in-space case with cubic-in-time velocity (spatial study)."""
    if not mu > 0:
        raise ValueError("viscosity must be positive")

    def sigma(x, y, t):
        return 2 + x * (x - 1) * np.cos(np.sin(t)) + y * (y - 1) * np.sin(np.sin(t))

    def sigma_grad(x, y, t):
        return _stack((2 * x - 1) * np.cos(np.sin(t)), (2 * y - 1) * np.sin(np.sin(t)))

    def sigma_dt(x, y, t):
        return np.cos(t) * (-x * (x - 1) * np.sin(np.sin(t)) + y * (y - 1) * np.cos(np.sin(t)))

    def u(x, y, t):
        return _stack(t ** 3 * y ** 2 * (y - 1), t ** 3 * x ** 2 * (x - 1))

    def u_grad(x, y, t):
        z = np.zeros(np.broadcast(x, y).shape)
        row1 = _stack(z, t ** 3 * (3 * y ** 2 - 2 * y))
        row2 = _stack(t ** 3 * (3 * x ** 2 - 2 * x), z)
        return np.stack([row1, row2], axis=-2)

    def u_dt(x, y, t):
        return _stack(3 * t ** 2 * y ** 2 * (y - 1), 3 * t ** 2 * x ** 2 * (x - 1))

    def lap_u(x, y, t):
        return _stack(t ** 3 * (6 * y - 2), t ** 3 * (6 * x - 2))

    def p(x, y, t):
        return t * x + y - (t + 1) / 2

    def p_grad(x, y, t):
        return _stack(t + 0 * x, 1 + 0 * y)

    def p_dt(x, y, t):
        return x - 0.5 + 0 * y

    s_ev = AnalyticEvaluator(sigma, sigma_grad, sigma_dt)
    u_ev = AnalyticEvaluator(u, u_grad, u_dt, ncomp=2)
    p_ev = AnalyticEvaluator(p, p_grad, p_dt)
    g, f = _compose_forcings(s_ev, u_ev, p_ev, lap_u, mu)
    return AnalyticCase("ex41", mu, s_ev, u_ev, p_ev, lap_u, g, f,
                        boundary_trace="interpolated-exact", final_time=0.5)


def _stream_parts(x):
    """x^2 (x-1)^2 and its first three derivatives."""
    return (x ** 2 * (x - 1) ** 2, 2 * x * (x - 1) * (2 * x - 1),
            2 * (6 * x ** 2 - 6 * x + 1), 12 * (2 * x - 1))


def case_ex42(mu: float = 1.0) -> AnalyticCase:
    """Trigonometric-in-time case with a stream-function velocity (temporal study)."""
    if not mu > 0:
        raise ValueError("viscosity must be positive")

    def sigma(x, y, t):
        return 2 + x * (1 - x) * np.cos(np.sin(t)) + y * (1 - y) * np.sin(np.sin(t))

    def sigma_grad(x, y, t):
        return _stack((1 - 2 * x) * np.cos(np.sin(t)), (1 - 2 * y) * np.sin(np.sin(t)))

    def sigma_dt(x, y, t):
        return np.cos(t) * (-x * (1 - x) * np.sin(np.sin(t)) + y * (1 - y) * np.cos(np.sin(t)))

    # u = (d_y psi, -d_x psi) with psi = 5 X(x) Y(y) time_factor
    def _u(x, y, c):
        X, X1, _, _ = _stream_parts(x)
        Y, Y1, _, _ = _stream_parts(y)
        return _stack(5 * c * X * Y1, -5 * c * X1 * Y)

    def u(x, y, t):
        return _u(x, y, np.cos(t))

    def u_dt(x, y, t):
        return _u(x, y, -np.sin(t))

    def u_grad(x, y, t):
        c = np.cos(t)
        X, X1, X2, _ = _stream_parts(x)
        Y, Y1, Y2, _ = _stream_parts(y)
        row1 = _stack(5 * c * X1 * Y1, 5 * c * X * Y2)
        row2 = _stack(-5 * c * X2 * Y, -5 * c * X1 * Y1)
        return np.stack([row1, row2], axis=-2)

    def lap_u(x, y, t):
        c = np.cos(t)
        X, X1, X2, X3 = _stream_parts(x)
        Y, Y1, Y2, Y3 = _stream_parts(y)
        return _stack(5 * c * (X2 * Y1 + X * Y3), -5 * c * (X3 * Y + X1 * Y2))

    def p(x, y, t):
        return np.sin(x) * np.sin(y) * np.sin(t)

    def p_grad(x, y, t):
        return _stack(np.cos(x) * np.sin(y) * np.sin(t), np.sin(x) * np.cos(y) * np.sin(t))

    def p_dt(x, y, t):
        return np.sin(x) * np.sin(y) * np.cos(t)

    s_ev = AnalyticEvaluator(sigma, sigma_grad, sigma_dt)
    u_ev = AnalyticEvaluator(u, u_grad, u_dt, ncomp=2)
    p_ev = AnalyticEvaluator(p, p_grad, p_dt)
    g, f = _compose_forcings(s_ev, u_ev, p_ev, lap_u, mu)
    return AnalyticCase("ex42", mu, s_ev, u_ev, p_ev, lap_u, g, f,
                        boundary_trace="homogeneous", final_time=1.0)


def case_stokes(mu: float = 1.0) -> AnalyticCase:
    """Steady Stokes problem (unit density, no convection).

    ``f = -mu lap u + grad p`` with the stream function
    ``5 x^2 (x-1)^2 y^2 (y-1)^2`` and ``p = x - 1/2``.
    """
    one = AnalyticEvaluator.constant(1.0)

    def u(x, y, t):
        X, X1, _, _ = _stream_parts(x)
        Y, Y1, _, _ = _stream_parts(y)
        return _stack(5 * X * Y1, -5 * X1 * Y)

    def u_grad(x, y, t):
        X, X1, X2, _ = _stream_parts(x)
        Y, Y1, Y2, _ = _stream_parts(y)
        return np.stack([_stack(5 * X1 * Y1, 5 * X * Y2), _stack(-5 * X2 * Y, -5 * X1 * Y1)], axis=-2)

    def lap_u(x, y, t):
        X, X1, X2, X3 = _stream_parts(x)
        Y, Y1, Y2, Y3 = _stream_parts(y)
        return _stack(5 * (X2 * Y1 + X * Y3), -5 * (X3 * Y + X1 * Y2))

    u_ev = AnalyticEvaluator(u, u_grad, lambda x, y, t: 0 * u(x, y, t), ncomp=2)
    p_ev = AnalyticEvaluator(lambda x, y, t: x - 0.5 + 0 * y,
                             lambda x, y, t: _stack(1 + 0 * x, 0 * y),
                             lambda x, y, t: 0 * x * y)
    f = AnalyticEvaluator(lambda x, y, t: -mu * lap_u(x, y, t) + p_ev.grad(x, y, t), ncomp=2)
    g = AnalyticEvaluator(lambda x, y, t: 0 * x * y)
    return AnalyticCase("stokes", mu, one, u_ev, p_ev, lap_u, g, f,
                        boundary_trace="homogeneous", steady=True)


CASES = {"ex41": case_ex41, "ex42": case_ex42, "stokes": case_stokes}


def get_case(name: str, mu: float = 1.0) -> AnalyticCase:
    try:
        return CASES[name](mu)
    except KeyError:
        raise ValueError(f"unknown case {name!r}; available: {sorted(CASES)}") from None


# --- self-consistency checks -------------------------------------------------

def sample_points(samples: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points strictly inside the unit square."""
    if samples < 1:
        raise ValueError("need at least one sample")
    pts = qmc.Halton(d=2, scramble=True, seed=seed).random(samples)
    return 1e-3 + (1 - 2e-3) * pts


def sample_times(final_time: float, count: int = 10) -> np.ndarray:
    return final_time * np.arange(1, count + 1) / count


def _g_identity(case, x, y, t):
    div = np.trace(case.u.grad(x, y, t), axis1=-2, axis2=-1)
    return (case.sigma.dt(x, y, t) + np.sum(case.u(x, y, t) * case.sigma.grad(x, y, t), axis=-1)
            + 0.5 * case.sigma(x, y, t) * div)


def _f_identity(case, x, y, t):
    if case.steady:
        return -case.mu * case.lap_u(x, y, t) + case.p.grad(x, y, t)
    s = case.sigma(x, y, t)[..., None]
    uu = case.u(x, y, t)
    jac = case.u.grad(x, y, t)
    rho = s ** 2
    conv = np.einsum("...cd,...d->...c", jac, uu)
    # div(rho u) = grad(rho) . u + rho div u
    grad_rho = 2 * s * case.sigma.grad(x, y, t)
    div_rho_u = np.sum(grad_rho * uu, axis=-1) + rho[..., 0] * np.trace(jac, axis1=-2, axis2=-1)
    return (s * case.dt_sigma_u(x, y, t) + rho * conv + 0.5 * uu * div_rho_u[..., None]
            - case.mu * case.lap_u(x, y, t) + case.p.grad(x, y, t))


def forcing_residual_check(case: AnalyticCase, samples: int = 100, seed: int = 0) -> float:
    """Largest violation of the forcing identities over sampled points and times."""
    pts = sample_points(samples, seed)
    x, y = pts[:, 0], pts[:, 1]
    worst = 0.0
    for t in sample_times(case.final_time):
        if case.g is not None:
            worst = max(worst, float(np.max(np.abs(case.g(x, y, t) - _g_identity(case, x, y, t)))))
        if case.f is not None:
            worst = max(worst, float(np.max(np.abs(case.f(x, y, t) - _f_identity(case, x, y, t)))))
    return worst


def derivative_mismatch(case: AnalyticCase, samples: int = 100, step: float = 1e-5,
                        seed: int = 1) -> dict:
    """Centered finite-difference check of every analytic derivative.

    Returns the largest absolute mismatch per derivative.
    """
    pts = sample_points(samples, seed)
    x, y = pts[:, 0], pts[:, 1]
    hs = step
    out: dict[str, float] = {}

    def record(name, analytic, numeric):
        out[name] = max(out.get(name, 0.0), float(np.max(np.abs(analytic - numeric))))

    for t in sample_times(case.final_time):
        for label, ev in (("sigma", case.sigma), ("u", case.u), ("p", case.p)):
            ddx = (ev(x + hs, y, t) - ev(x - hs, y, t)) / (2 * hs)
            ddy = (ev(x, y + hs, t) - ev(x, y - hs, t)) / (2 * hs)
            record(f"grad_{label}", ev.grad(x, y, t), np.stack([ddx, ddy], axis=-1))
            if ev.dt is not None:
                ddt = (ev(x, y, t + hs) - ev(x, y, t - hs)) / (2 * hs)
                record(f"dt_{label}", ev.dt(x, y, t), ddt)
        gx = (case.u.grad(x + hs, y, t)[..., 0] - case.u.grad(x - hs, y, t)[..., 0]) / (2 * hs)
        gy = (case.u.grad(x, y + hs, t)[..., 1] - case.u.grad(x, y - hs, t)[..., 1]) / (2 * hs)
        record("lap_u", case.lap_u(x, y, t), gx + gy)
        su = lambda tt: case.sigma(x, y, tt)[..., None] * case.u(x, y, tt)  # noqa: E731
        record("dt_sigma_u", case.dt_sigma_u(x, y, t), (su(t + hs) - su(t - hs)) / (2 * hs))
    return out


def max_divergence(case: AnalyticCase, samples: int = 1000, seed: int = 2) -> float:
    rng = np.random.default_rng(seed)
    x, y = rng.random(samples), rng.random(samples)
    t = rng.random(samples) * case.final_time
    return float(np.max(np.abs(np.trace(case.u.grad(x, y, t), axis1=-2, axis2=-1))))
