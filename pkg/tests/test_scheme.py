from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from vdns.checks import (_constant_case, constant_state, energy_violations, oracle_comparison,
                         random_smooth_case, random_state, skew_symmetry)
from vdns.fem import AnalyticEvaluator, Field, l2_error
from vdns.mms import case_ex41, case_ex42
from vdns.scheme import (Discretization, SchemeConfig, SimulationError, TimeState,
                         density_system, discrete_energy, initialize_first_step, momentum_system,
                         run_simulation)


@pytest.fixture(scope="module")
def disc4():
    return Discretization(4)


def _uniform_state(disc, sigma, u):
    s = Field(disc.S, np.full(disc.S.dof_count, float(sigma)))
    v = Field(disc.V, np.repeat(np.asarray(u, dtype=float), disc.S.dof_count))
    return TimeState(s, s.copy(), v, v.copy(), Field.zeros(disc.Q), 0, 0.0)


@pytest.mark.parametrize("sigma,u,expected", [(1.0, (0, 0), 2.0), (2.0, (0, 0), 8.0),
                                              (0.0, (0, 0), 0.0), (1.0, (1, 1), 6.0)])
def test_energy_of_uniform_states(disc4, sigma, u, expected):
    assert discrete_energy(_uniform_state(disc4, sigma, u), disc4.rule) == pytest.approx(
        expected, rel=1e-14, abs=1e-300)


def test_zero_state_stays_zero():
    zero = _constant_case(0.0)
    cfg = SchemeConfig(tau=0.1, T=0.5, mesh_n=3, forcing_enabled=False, dirichlet="zero")
    state, reports = run_simulation(zero, cfg)
    assert not np.any(state.sigma_curr.coefficients)
    assert not np.any(state.u_curr.coefficients)
    assert all(r.energy == 0.0 for r in reports)


def test_constant_state_preserved():
    results = constant_state(value=1.7, steps=10, mesh_n=3)
    assert all(r.passed for r in results), [r.line() for r in results]


def test_oracle_agreement_small():
    r = oracle_comparison(n_states=1, seed=5)
    assert r.passed, r.line()


def test_convection_skew():
    r = skew_symmetry(n_states=1, mesh_n=3)
    assert r.passed, r.line()


def test_density_forms_agree_with_zero_normal_trace(disc4, rng):
    state = random_state(disc4, rng)
    for f in (state.u_curr, state.u_prev):
        f.coefficients[disc4.V.boundary_dofs] = 0.0
    mats = [density_system(disc4, state, case_ex41(), SchemeConfig(0.1, 1.0, density_convection=f))[0]
            for f in ("divergence", "skew")]
    assert abs(mats[0] - mats[1]).max() <= 1e-12 * abs(mats[1]).max()


def test_density_forms_differ_with_normal_flow(disc4, rng):
    state = random_state(disc4, rng)
    mats = [density_system(disc4, state, None, SchemeConfig(0.1, 1.0, density_convection=f))[0]
            for f in ("divergence", "skew")]
    assert abs(mats[0] - mats[1]).max() > 1e-6


def test_reduces_to_stokes_without_density_or_flow(disc4):
    """sigma = 1 and zero advection: momentum block = alpha M + mu K."""
    state = _uniform_state(disc4, 1.0, (0.0, 0.0))
    cfg = SchemeConfig(tau=0.25, T=1.0, mu=0.7)
    system, conv = momentum_system(disc4, state, state.sigma_curr, None, cfg, order=2)
    assert conv.nnz == 0 or abs(conv).max() == 0
    block = 1.5 / 0.25 * disc4.mass + 0.7 * disc4.stiffness
    nv = disc4.V.dof_count
    a = system.matrix[:nv, :nv]
    ref = sp.block_diag([block, block])
    assert abs(a - ref).max() <= 1e-13 * abs(ref).max()
    np.testing.assert_array_equal(system.rhs, 0.0)


def test_first_step_is_accurate():
    case = case_ex41()
    errs = []
    for n in (8, 16):
        cfg = SchemeConfig(tau=1 / n, T=0.5, mesh_n=n)
        state, report = initialize_first_step(case, cfg)
        assert state.step_index == 1 and state.time == pytest.approx(1 / n)
        assert report.residual_density <= 1e-10 and report.residual_momentum <= 1e-10
        assert abs(report.pressure_mean) <= 1e-12
        errs.append(l2_error(state.sigma_curr, case.sigma, state.time))
    # one backward-Euler step: local error O(tau^2) plus O(h^3) interpolation
    assert errs[1] < errs[0] / 3


def test_short_run_reports(disc4):
    case = case_ex42()
    cfg = SchemeConfig(tau=0.125, T=0.375, mesh_n=4)
    seen = []
    state, reports = run_simulation(case, cfg, observer=lambda r, s: seen.append(r.step_index),
                                    disc=disc4)
    assert seen == [1, 2, 3] and state.time == 0.375
    for r in reports:
        assert r.residual_density <= 1e-10 and r.residual_momentum <= 1e-10
        assert abs(r.pressure_mean) <= 1e-12
        assert r.min_sigma > 0 and not r.positivity_lost
        assert len(r.csv_row()) == 8


def test_runs_are_deterministic():
    cfg = SchemeConfig(tau=0.125, T=0.375, mesh_n=4)
    a, _ = run_simulation(case_ex42(), cfg)
    b, _ = run_simulation(case_ex42(), cfg)
    assert np.array_equal(a.u_curr.coefficients, b.u_curr.coefficients)
    assert np.array_equal(a.sigma_curr.coefficients, b.sigma_curr.coefficients)


def test_failure_is_wrapped_with_step_index():
    case = case_ex42()
    bad_f = AnalyticEvaluator(lambda x, y, t: np.full(np.shape(x) + (2,), np.nan), ncomp=2)
    with pytest.raises(SimulationError) as info:
        run_simulation(replace(case, f=bad_f), SchemeConfig(tau=0.125, T=0.375, mesh_n=2))
    assert info.value.step_index == 1


@pytest.mark.parametrize("kw", [dict(tau=0.3, T=1.0), dict(tau=0.1, T=0.3), dict(tau=0.1, T=0.1), dict(tau=-1, T=1.0),
                                dict(tau=0.1, T=1.0, dirichlet="free"),
                                dict(tau=0.1, T=1.0, mu=0.0),
                                dict(tau=0.1, T=1.0, density_convection="upwind")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SchemeConfig(**kw)


def test_step_count_exact_for_binary_fractions():
    assert SchemeConfig(tau=0.0125, T=1.0).n_steps == 80
    assert SchemeConfig(tau=0.1, T=10.0).n_steps == 100


@given(st.integers(0, 10_000))
@settings(max_examples=5, deadline=None)
def test_energy_never_increases_random_data(seed):
    energy, bad, _ = energy_violations(random_smooth_case(seed), tau=0.125, T=0.75, mesh_n=4)
    assert bad is None, energy
    assert energy[-1] < energy[0]


def test_random_initial_density_bounded_below():
    from vdns.mms import sample_points
    pts = sample_points(500)
    for seed in range(20):
        case = random_smooth_case(seed)
        assert case.sigma(pts[:, 0], pts[:, 1], 0.0).min() >= 0.5
        for xy in ((pts[:, 0], 0 * pts[:, 0]), (0 * pts[:, 0] + 1, pts[:, 1])):
            np.testing.assert_allclose(case.u(*xy, 0.0), 0.0, atol=1e-15)
