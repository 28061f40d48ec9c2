"""Self-checks: manufactured-solution consistency, brute-force assembly
comparison, structural invariants and randomized energy dissipation.

Every check returns a :class:`CheckResult`; :func:`run_all_checks` bundles
the fast ones for ``vdns check``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import Field
from .fem.space import AnalyticEvaluator
from .mms import (AnalyticCase, derivative_mismatch, forcing_residual_check, get_case,
                  max_divergence)
from .oracle import BruteForceAssembler, relative_mismatch
from .scheme import (Discretization, SchemeConfig, TimeState, _bdf_coefficients, density_system,
                     discrete_energy, initial_state, momentum_system, run_simulation)

FORCING_TOL = 1e-12
FD_TOL = 1e-7
DIVERGENCE_TOL = 1e-13
ORACLE_TOL = 1e-12
SKEW_TOL = 1e-12
PRESSURE_MEAN_TOL = 1e-12
RESIDUAL_TOL = 1e-10
CONSTANT_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}: {self.value:.3e} vs {self.tolerance:.0e}{extra}"


def _le(name, value, tol, detail=""):
    return CheckResult(name, bool(value <= tol), float(value), tol, detail)


# --- manufactured solutions -------------------------------------------------------

def mms_checks(case_names=("ex41", "ex42"), mu: float = 1.0) -> list:
    out = []
    for name in case_names:
        case = get_case(name, mu)
        out.append(_le(f"{name} forcing identities", forcing_residual_check(case), FORCING_TOL))
        fd = derivative_mismatch(case)
        worst = max(fd, key=fd.get)
        out.append(_le(f"{name} derivatives vs finite differences", fd[worst], FD_TOL,
                       f"worst: {worst}"))
        out.append(_le(f"{name} divergence-free", max_divergence(case), DIVERGENCE_TOL))
    return out


# --- brute-force assembly comparison ---------------------------------------------

def random_state(disc: Discretization, rng, step_index: int = 3, time: float = 0.3) -> TimeState:
    """Random coefficients with sigma in [0.5, 1.5]."""
    s, v, q = disc.S, disc.V, disc.Q
    return TimeState(Field(s, 0.5 + rng.random(s.dof_count)),
                     Field(s, 0.5 + rng.random(s.dof_count)),
                     Field(v, rng.standard_normal(v.dof_count)),
                     Field(v, rng.standard_normal(v.dof_count)),
                     Field.zeros(q), step_index, time)


def oracle_comparison(n_states: int = 5, mesh_n: int = 2, seed: int = 0,
                      case_name: str = "ex41") -> CheckResult:
    """Largest relative mismatch between production and loop assembly.

    Both BDF orders and both density transport forms are compared for each
    random state; matrices and right-hand sides are checked entry-wise.
    """
    disc = Discretization(mesh_n)
    oracle = BruteForceAssembler(disc.mesh, disc.rule)
    case = get_case(case_name)
    rng = np.random.default_rng(seed)
    tau = 0.1
    worst = 0.0
    for _ in range(n_states):
        state = random_state(disc, rng)
        sigma_next = Field(disc.S, 0.5 + rng.random(disc.S.dof_count))
        t_new = state.time + tau
        for order in (1, 2):
            alpha, (w0, w1) = _bdf_coefficients(order, tau)
            adv = state.extrapolated_velocity() if order == 2 else state.u_curr
            hist = w0 * state.sigma_curr.coefficients
            terms = [(w0, state.sigma_curr.coefficients, state.u_curr.coefficients)]
            if order == 2:
                hist = hist + w1 * state.sigma_prev.coefficients
                terms.append((w1, state.sigma_prev.coefficients, state.u_prev.coefficients))
            for form in ("divergence", "skew"):
                cfg = SchemeConfig(tau=tau, T=1.0, density_convection=form)
                mat, rhs, _ = density_system(disc, state, case, cfg, order)
                ref_mat, ref_rhs = oracle.density_system(
                    alpha, hist, adv.coefficients, lambda x, y: case.g(x, y, t_new), form)
                worst = max(worst, relative_mismatch(mat, ref_mat), relative_mismatch(rhs, ref_rhs))
            system, _ = momentum_system(disc, state, sigma_next, case, cfg, order)
            ref_mat, ref_rhs = oracle.momentum_system(
                alpha, cfg.mu, sigma_next.coefficients, adv.coefficients, terms,
                lambda x, y: case.f(x, y, t_new))
            worst = max(worst, relative_mismatch(system.matrix, ref_mat),
                        relative_mismatch(system.rhs, ref_rhs))
    return _le(f"loop-assembly oracle, {n_states} random states, n={mesh_n}", worst, ORACLE_TOL)


# --- structural invariants -------------------------------------------------------

def _skew_defect(c) -> float:
    scale = abs(c).max()
    return float(abs(c + c.T).max() / scale) if scale > 0 else 0.0


def skew_symmetry(n_states: int = 3, mesh_n: int = 4, seed: int = 1) -> CheckResult:
    """``|C + C^T| / |C|`` for the momentum convection and, with zero normal
    trace, the density convection in both forms."""
    disc = Discretization(mesh_n)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        state = random_state(disc, rng)
        bd = disc.V.boundary_dofs
        for f in (state.u_curr, state.u_prev):
            f.coefficients[bd] = 0.0
        sigma_next = Field(disc.S, 0.5 + rng.random(disc.S.dof_count))
        for form in ("divergence", "skew"):
            cfg = SchemeConfig(tau=0.1, T=1.0, density_convection=form)
            _, _, conv = density_system(disc, state, None, cfg, 2)
            worst = max(worst, _skew_defect(conv))
        _, conv = momentum_system(disc, state, sigma_next, None, cfg, 2)
        worst = max(worst, _skew_defect(conv))
    return _le("convection matrices skew-symmetric", worst, SKEW_TOL)


def _constant_case(value: float) -> AnalyticCase:
    return AnalyticCase("constant", 1.0, AnalyticEvaluator.constant(value),
                        AnalyticEvaluator.constant([0.0, 0.0], ncomp=2),
                        AnalyticEvaluator.constant(0.0), final_time=1.0)


def constant_state(value: float = 1.3, steps: int = 50, mesh_n: int = 4) -> list:
    """A uniform density at rest stays exactly uniform and at rest."""
    tau = 0.02
    cfg = SchemeConfig(tau=tau, T=steps * tau, mesh_n=mesh_n, forcing_enabled=False,
                       dirichlet="zero")
    state, reports = run_simulation(_constant_case(value), cfg)
    sig_dev = float(np.max(np.abs(state.sigma_curr.coefficients - value)))
    u_dev = float(np.max(np.abs(state.u_curr.coefficients)))
    # sigma passes through an LU solve, so it is exact only up to round-off
    return [_le(f"constant state preserved over {steps} steps (sigma)", sig_dev / value,
                CONSTANT_TOL),
            _le(f"constant state preserved over {steps} steps (u)", u_dev, 0.0)] + \
        step_report_checks(reports, "constant state")


def step_report_checks(reports, label: str) -> list:
    pm = max(abs(r.pressure_mean) for r in reports)
    res = max(max(r.residual_density, r.residual_momentum) for r in reports)
    return [_le(f"{label}: pressure mean every step", pm, PRESSURE_MEAN_TOL),
            _le(f"{label}: linear-solve residuals", res, RESIDUAL_TOL)]


# --- randomized energy dissipation ------------------------------------------------

def random_smooth_case(seed: int, modes: int = 3) -> AnalyticCase:
    """Smooth random initial data: ``sigma >= 0.5`` and ``u`` vanishing on the boundary."""
    rng = np.random.default_rng(seed)
    amp = rng.uniform(-1, 1, (modes, modes))
    amp *= rng.uniform(0.2, 0.75) / np.abs(amp).sum()
    base = 1.25 + rng.uniform(0, 0.5)
    ka = np.arange(modes) * np.pi
    vel = rng.standard_normal((2, modes, modes)) * rng.uniform(0.5, 5.0)

    def sigma(x, y, t):
        cx = np.cos(np.multiply.outer(x, ka))
        cy = np.cos(np.multiply.outer(y, ka))
        return base + np.einsum("...i,...j,ij->...", cx, cy, amp)

    def u(x, y, t):
        bubble = x * (1 - x) * y * (1 - y)
        sx = np.sin(np.multiply.outer(x, ka + np.pi / 2))
        sy = np.sin(np.multiply.outer(y, ka + np.pi / 2))
        comps = [bubble * np.einsum("...i,...j,ij->...", sx, sy, vel[c]) for c in range(2)]
        return np.stack(comps, axis=-1)

    zero = AnalyticEvaluator.constant(0.0)
    return AnalyticCase(f"random-{seed}", 1.0, AnalyticEvaluator(sigma),
                        AnalyticEvaluator(u, ncomp=2), zero, final_time=1.0)


def energy_violations(case: AnalyticCase, tau: float, T: float, mesh_n: int, mu: float = 1.0):
    """Energy series (level 0 first) and the first step where it increases, or None."""
    cfg = SchemeConfig(tau=tau, T=T, mu=mu, mesh_n=mesh_n, forcing_enabled=False,
                       dirichlet="zero")
    disc = Discretization(mesh_n)
    energy = [discrete_energy(initial_state(case, cfg, disc), disc.rule)]
    _, reports = run_simulation(case, cfg, disc=disc)
    energy += [r.energy for r in reports]
    tol = 1e-12 * energy[1]
    bad = next((k for k in range(1, len(energy)) if energy[k] > energy[k - 1] + tol), None)
    return np.array(energy), bad, reports


def random_energy_suite(count: int = 20, mesh_n: int = 8, tau: float = 0.05, steps: int = 20,
                        seed: int = 100) -> CheckResult:
    failures = []
    decay = []
    for k in range(count):
        energy, bad, _ = energy_violations(random_smooth_case(seed + k), tau, steps * tau, mesh_n)
        decay.append(energy[-1] / energy[0])
        if bad is not None:
            failures.append(f"state {k} at step {bad}")
    detail = f"energy ratio E^N/E^0 in [{min(decay):.3f}, {max(decay):.3f}]"
    if failures:
        detail += "; violations: " + ", ".join(failures)
    return CheckResult(f"energy dissipation, {count} random initial states", not failures,
                       float(len(failures)), 0.0, detail)


def run_all_checks(mu: float = 1.0) -> list:
    results = mms_checks(mu=mu)
    results.append(oracle_comparison())
    results.append(skew_symmetry())
    results.extend(constant_state())
    return results
