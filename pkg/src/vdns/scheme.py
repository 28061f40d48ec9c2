"""Linearized BDF2 time stepping in the (sigma, u, p) variables.

Each step solves two linear problems:

1. transport of ``sigma`` (P2) with the extrapolated velocity
   ``u_hat = 2 u^n - u^{n-1}``;
2. a Taylor-Hood (P2/P1) Oseen-type saddle problem for ``(u, p)`` whose mass
   term is weighted by ``rho = sigma^{n+1} ** 2`` pointwise.

Momentum convection is assembled in skew-symmetric form ``(C - C^T) / 2`` so
that it drops out of the discrete energy balance under any quadrature rule,
and the momentum time derivative is kept as ``sigma^{n+1} D(sigma u)``.
Density transport is skew whenever the advecting velocity has zero normal
trace (see ``SchemeConfig.density_convection``). Together these make the
energy of :func:`discrete_energy` non-increasing whenever the forcing and
boundary data vanish.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .fem import (Field, assemble_form, assemble_vector, build_space, interpolate_lagrange,
                  mass_kernel, quad_points, stiffness_kernel, triangle_quadrature)
from .linsolve import (LinearSystem, apply_dirichlet, build_saddle_system,
                       nested_dissection_order, solve_direct)
from .mesh import build_unit_square_mesh
from .mms import AnalyticCase

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemeConfig:
    """Run parameters.

    ``dirichlet`` selects the velocity boundary data: ``"case"`` uses the
    case's trace (zero, or the interpolated exact velocity), ``"zero"``
    forces homogeneous data.

    ``density_convection`` picks the transport form of the sigma update:
    ``"divergence"`` assembles ``(u . grad s, phi) + (div(u) s, phi) / 2``,
    ``"skew"`` assembles ``((u . grad s, phi) - (u s, grad phi)) / 2``. The two
    agree when ``u . n = 0`` on the boundary (exactly, for P2 velocity and
    density and a rule of degree >= 5); only the divergence form stays
    consistent when the velocity trace has a normal component.
    """

    tau: float
    T: float
    mu: float = 1.0
    mesh_n: int = 8
    quadrature_degree: int = 6
    forcing_enabled: bool = True
    dirichlet: str = "case"
    density_convection: str = "divergence"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if not self.mu > 0:
            raise ValueError(f"viscosity must be positive, got {self.mu}")
        if self.T < 2 * self.tau:
            raise ValueError("final time must cover at least two steps")
        ratio = self.T / self.tau
        if abs(ratio - round(ratio)) > 0.5 * np.spacing(ratio):
            raise ValueError(f"T / tau = {ratio!r} is not an integer")
        if self.dirichlet not in ("case", "zero"):
            raise ValueError(f"dirichlet must be 'case' or 'zero', got {self.dirichlet!r}")
        if self.density_convection not in ("divergence", "skew"):
            raise ValueError(f"unknown density convection form {self.density_convection!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.tau))


@dataclass
class TimeState:
    sigma_curr: Field
    sigma_prev: Field
    u_curr: Field
    u_prev: Field
    p_curr: Field
    step_index: int
    time: float

    def extrapolated_velocity(self) -> Field:
        return Field(self.u_curr.space, 2 * self.u_curr.coefficients - self.u_prev.coefficients)


@dataclass
class StepReport:
    step_index: int
    time: float
    wall_time: float
    residual_density: float
    residual_momentum: float
    energy: float
    min_sigma: float
    max_sigma: float
    pressure_mean: float
    positivity_lost: bool = False

    CSV_COLUMNS = ("n", "t", "E", "residual_density", "residual_momentum",
                   "min_sigma", "max_sigma", "pressure_mean")

    def csv_row(self):
        return (self.step_index, self.time, self.energy, self.residual_density,
                self.residual_momentum, self.min_sigma, self.max_sigma, self.pressure_mean)


class SimulationError(RuntimeError):
    def __init__(self, step_index, cause):
        super().__init__(f"step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause


# --- discretization ------------------------------------------------------------

class Discretization:
    """Mesh, Taylor-Hood spaces, quadrature and the time-independent matrices."""

    def __init__(self, mesh_n: int, quadrature_degree: int = 6):
        self.mesh = build_unit_square_mesh(mesh_n)
        self.rule = triangle_quadrature(quadrature_degree)
        self.S = build_space(self.mesh, "P2-scalar")
        self.V = build_space(self.mesh, "P2-vector2")
        self.Q = build_space(self.mesh, "P1-scalar")
        self.qp = quad_points(self.mesh, self.rule)

    @cached_property
    def mass(self):
        return assemble_form(self.S, self.S, mass_kernel(self.S, self.S), self.rule)

    @cached_property
    def stiffness(self):
        return assemble_form(self.S, self.S, stiffness_kernel(self.S, self.S), self.rule)

    @cached_property
    def divergence(self):
        """``B[k, j] = -(psi_k, div phi_j)`` for P1 ``psi`` and vector P2 ``phi``."""
        blocks = []
        for c in range(2):
            def kernel(q, c=c):
                psi = q.basis(self.Q).val
                dphi = q.basis(self.S).grad
                return -psi[None, :, :, None] * dphi[:, :, None, :, c]
            blocks.append(assemble_form(self.S, self.Q, kernel, self.rule))
        return sp.hstack(blocks, format="csr")

    @cached_property
    def pressure_mean_vector(self):
        def kernel(q):
            return np.broadcast_to(q.basis(self.Q).val[None], q.shape + (3,))
        return assemble_vector(self.Q, kernel, self.rule)

    @cached_property
    def density_ordering(self):
        return nested_dissection_order(self.mass, self.S.node_coordinates)

    @cached_property
    def saddle_ordering(self):
        """Fill-reducing order of the saddle system; the multiplier goes last."""
        k = sp.block_diag([self.mass, self.mass])
        b = self.divergence
        graph = sp.bmat([[k, b.T], [b, None]], format="csr")
        coords = np.vstack([self.V.node_coordinates, self.Q.node_coordinates])
        priority = np.r_[np.zeros(self.V.dof_count, int), np.ones(self.Q.dof_count, int)]
        order = nested_dissection_order(graph, coords, priority)
        return np.append(order, graph.shape[0])

    # per-step forms (coefficients given at quadrature points)

    def weighted_mass(self, weight):
        return assemble_form(self.S, self.S, mass_kernel(self.S, self.S, weight), self.rule)

    def convection(self, b, weight=None):
        """``C[i, j] = (w b . grad phi_j, phi_i)`` for ``b`` given at quadrature points."""
        def kernel(q):
            phi = q.basis(self.S)
            adv = np.einsum("eqd,eqjd->eqj", b, phi.grad)
            if weight is not None:
                adv = adv * weight[:, :, None]
            return phi.val[None, :, :, None] * adv[:, :, None, :]
        return assemble_form(self.S, self.S, kernel, self.rule)

    def skew_convection(self, b, weight=None):
        c = self.convection(b, weight)
        return (0.5 * (c - c.T)).tocsr()

    def divergence_convection(self, advecting: Field):
        """``(b . grad phi_j, phi_i) + (div(b) phi_j, phi_i) / 2``."""
        b = self.qp.eval(advecting)
        div = np.trace(self.qp.grad(advecting), axis1=-2, axis2=-1)
        return (self.convection(b) + 0.5 * self.weighted_mass(div)).tocsr()

    def load(self, values):
        """``(values, phi_i)`` for scalar values at quadrature points."""
        def kernel(q):
            return values[:, :, None] * q.basis(self.S).val[None]
        return assemble_vector(self.S, kernel, self.rule)

    def vector_load(self, values):
        return np.concatenate([self.load(values[..., c]) for c in range(2)])


# --- one step -------------------------------------------------------------------

def _bdf_coefficients(order: int, tau: float):
    """Coefficient of the new level and weights of the old levels."""
    if order == 1:
        return 1.0 / tau, (1.0 / tau, 0.0)
    return 1.5 / tau, (2.0 / tau, -0.5 / tau)


def density_system(disc: Discretization, state: TimeState, case: Optional[AnalyticCase],
                   cfg: SchemeConfig, order: int = 2, advecting: Optional[Field] = None):
    """Matrix, right-hand side and skew convection matrix of the sigma update."""
    alpha, (w0, w1) = _bdf_coefficients(order, cfg.tau)
    if advecting is None:
        advecting = state.extrapolated_velocity() if order == 2 else state.u_curr
    if cfg.density_convection == "skew":
        conv = disc.skew_convection(disc.qp.eval(advecting))
    else:
        conv = disc.divergence_convection(advecting)
    mat = (alpha * disc.mass + conv).tocsr()
    hist = w0 * state.sigma_curr.coefficients
    if order == 2:
        hist = hist + w1 * state.sigma_prev.coefficients
    rhs = disc.mass @ hist
    t_new = state.time + cfg.tau
    if cfg.forcing_enabled and case is not None and case.g is not None:
        rhs = rhs + disc.load(disc.qp.eval(case.g, t_new))
    return mat, rhs, conv


def density_step(state: TimeState, case: Optional[AnalyticCase], cfg: SchemeConfig,
                 disc: Optional[Discretization] = None, order: int = 2):
    """Advance sigma one step; returns ``(Field, relative residual)``."""
    disc = disc or Discretization(cfg.mesh_n, cfg.quadrature_degree)
    mat, rhs, _ = density_system(disc, state, case, cfg, order)
    x, res = solve_direct(LinearSystem(mat, rhs), return_residual=True,
                          ordering=disc.density_ordering)
    return Field(disc.S, x), res


def velocity_trace(disc: Discretization, case: Optional[AnalyticCase], cfg: SchemeConfig,
                   t: float) -> np.ndarray:
    """Prescribed values at the boundary velocity DOFs."""
    bd = disc.V.boundary_dofs
    if cfg.dirichlet == "zero" or case is None or case.boundary_trace == "homogeneous":
        return np.zeros(len(bd))
    return interpolate_lagrange(case.u, disc.V, t).coefficients[bd]


def momentum_system(disc: Discretization, state: TimeState, sigma_next: Field,
                    case: Optional[AnalyticCase], cfg: SchemeConfig, order: int = 2,
                    advecting: Optional[Field] = None):
    """Saddle system (before boundary elimination) and its convection block."""
    alpha, (w0, w1) = _bdf_coefficients(order, cfg.tau)
    qp = disc.qp
    if advecting is None:
        advecting = state.extrapolated_velocity() if order == 2 else state.u_curr
    s1 = qp.eval(sigma_next)
    rho = s1 ** 2
    b = qp.eval(advecting)
    conv = disc.skew_convection(b, rho)
    block = (alpha * disc.weighted_mass(rho) + conv + cfg.mu * disc.stiffness).tocsr()
    a = sp.block_diag([block, block], format="csr")

    hist = w0 * qp.eval(state.sigma_curr)[..., None] * qp.eval(state.u_curr)
    if order == 2:
        hist = hist + w1 * qp.eval(state.sigma_prev)[..., None] * qp.eval(state.u_prev)
    rhs = disc.vector_load(s1[..., None] * hist)
    t_new = state.time + cfg.tau
    if cfg.forcing_enabled and case is not None and case.f is not None:
        rhs = rhs + disc.vector_load(qp.eval(case.f, t_new))
    system = build_saddle_system(a, disc.divergence, rhs, disc.pressure_mean_vector)
    return system, conv


def momentum_step(state: TimeState, sigma_next: Field, case: Optional[AnalyticCase],
                  cfg: SchemeConfig, disc: Optional[Discretization] = None, order: int = 2):
    """Solve for ``(u^{n+1}, p^{n+1})``; returns ``(u, p, residual)``."""
    disc = disc or Discretization(cfg.mesh_n, cfg.quadrature_degree)
    system, _ = momentum_system(disc, state, sigma_next, case, cfg, order)
    t_new = state.time + cfg.tau
    system = apply_dirichlet(system, disc.V.boundary_dofs,
                             velocity_trace(disc, case, cfg, t_new))
    x, res = solve_direct(system, return_residual=True, ordering=disc.saddle_ordering)
    nv, npr = disc.V.dof_count, disc.Q.dof_count
    return Field(disc.V, x[:nv]), Field(disc.Q, x[nv:nv + npr]), res


def solve_stokes(case: AnalyticCase, disc: Discretization, t: float = 0.0):
    """Steady Stokes problem ``-mu lap u + grad p = f``, ``div u = 0`` with the
    case's velocity trace; returns ``(u, p, residual)``."""
    block = case.mu * disc.stiffness
    a = sp.block_diag([block, block], format="csr")
    rhs = disc.vector_load(disc.qp.eval(case.f, t)) if case.f is not None else np.zeros(a.shape[0])
    system = build_saddle_system(a, disc.divergence, rhs, disc.pressure_mean_vector)
    cfg = SchemeConfig(tau=1.0, T=2.0, mu=case.mu)
    system = apply_dirichlet(system, disc.V.boundary_dofs, velocity_trace(disc, case, cfg, t))
    x, res = solve_direct(system, return_residual=True, ordering=disc.saddle_ordering)
    nv, npr = disc.V.dof_count, disc.Q.dof_count
    return Field(disc.V, x[:nv]), Field(disc.Q, x[nv:nv + npr]), res


# --- energy ---------------------------------------------------------------------

def discrete_energy(state: TimeState, rule=None) -> float:
    """``|s|^2 + |s u|^2 + |2 s - s_prev|^2 + |2 s u - s_prev u_prev|^2`` (squared L2 norms).

    All products are formed at the quadrature points of ``rule``.
    """
    rule = rule or triangle_quadrature(6)
    qp = quad_points(state.sigma_curr.space.mesh, rule)
    s, sm = qp.eval(state.sigma_curr), qp.eval(state.sigma_prev)
    u, um = qp.eval(state.u_curr), qp.eval(state.u_prev)
    su = s[..., None] * u
    ext = 2 * su - sm[..., None] * um
    dens = s ** 2 + np.sum(su ** 2, axis=-1) + (2 * s - sm) ** 2 + np.sum(ext ** 2, axis=-1)
    return qp.integrate(dens)


# --- driver ---------------------------------------------------------------------

def initial_state(case: AnalyticCase, cfg: SchemeConfig, disc: Discretization,
                  t0: float = 0.0) -> TimeState:
    """Level 0: nodal interpolants of the initial sigma and u.

    The "previous" level duplicates level 0 so the energy is defined. With
    homogeneous velocity data the boundary values of ``u`` are zeroed, so the
    initial velocity is compatible with the boundary condition.
    """
    sigma0 = interpolate_lagrange(case.sigma, disc.S, t0)
    u0 = interpolate_lagrange(case.u, disc.V, t0)
    if cfg.dirichlet == "zero":
        u0.coefficients[disc.V.boundary_dofs] = 0.0
    return TimeState(sigma0, sigma0.copy(), u0, u0.copy(), Field.zeros(disc.Q), 0, t0)


def _advance(state, case, cfg, disc, order, t0=0.0):
    start = time.perf_counter()
    sigma_next, res_d = density_step(state, case, cfg, disc, order)
    u_next, p_next, res_m = momentum_step(state, sigma_next, case, cfg, disc, order)
    n = state.step_index + 1
    new = TimeState(sigma_next, state.sigma_curr, u_next, state.u_curr, p_next,
                    n, t0 + n * cfg.tau)
    s_qp = disc.qp.eval(sigma_next)
    smin = float(s_qp.min())
    if smin <= 0:
        log.warning("step %d: sigma lost positivity (min %.3e)", n, smin)
    report = StepReport(
        step_index=n, time=new.time, wall_time=time.perf_counter() - start,
        residual_density=res_d, residual_momentum=res_m,
        energy=discrete_energy(new, disc.rule), min_sigma=smin, max_sigma=float(s_qp.max()),
        pressure_mean=float(disc.pressure_mean_vector @ p_next.coefficients),
        positivity_lost=smin <= 0)
    return new, report


def initialize_first_step(case: AnalyticCase, cfg: SchemeConfig,
                          disc: Optional[Discretization] = None, t0: float = 0.0):
    """Backward-Euler start from the interpolated initial data.

    Returns the state at level 1 and its :class:`StepReport`.
    """
    disc = disc or Discretization(cfg.mesh_n, cfg.quadrature_degree)
    return _advance(initial_state(case, cfg, disc, t0), case, cfg, disc, 1, t0)


def run_simulation(case: AnalyticCase, cfg: SchemeConfig,
                   observer: Optional[Callable[[StepReport, TimeState], None]] = None,
                   disc: Optional[Discretization] = None, t0: float = 0.0):
    """Run to ``t = T``; returns the final state and the list of step reports.

    ``observer(report, state)`` is called after every step, including the
    backward-Euler start.
    """
    disc = disc or Discretization(cfg.mesh_n, cfg.quadrature_degree)
    reports = []
    state = initial_state(case, cfg, disc, t0)
    for n in range(cfg.n_steps):
        try:
            state, report = _advance(state, case, cfg, disc, 1 if n == 0 else 2, t0)
        except Exception as exc:
            raise SimulationError(n + 1, exc) from exc
        reports.append(report)
        if observer is not None:
            observer(report, state)
    return state, reports
