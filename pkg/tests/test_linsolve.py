import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from vdns.fem import (AnalyticEvaluator, Field, assemble_form, build_space, interpolate_lagrange,
                      l2_error, stiffness_kernel, triangle_quadrature)
from vdns.harness import eoc
from vdns.linsolve import (AccuracyError, Factorization, FactorizationError, LinearSystem,
                           apply_dirichlet, as_csr, build_saddle_system, nested_dissection_order,
                           relative_residual, solve_direct, write_matrix_market)
from vdns.mesh import build_unit_square_mesh
from vdns.mms import case_stokes
from vdns.scheme import Discretization, solve_stokes


def test_two_by_two():
    x = solve_direct(LinearSystem(np.array([[2.0, 1.0], [1.0, 3.0]]), np.array([3.0, 5.0])))
    np.testing.assert_allclose(x, [4 / 5, 7 / 5], rtol=1e-15)


def test_identity(rng):
    b = rng.standard_normal(7)
    np.testing.assert_array_equal(solve_direct(LinearSystem(sp.eye(7), b)), b)


def test_singular_matrix_raises_with_pivot():
    with pytest.raises(FactorizationError) as info:
        solve_direct(LinearSystem(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2)))
    assert info.value.pivot is not None


def test_singular_with_ordering_raises():
    a = sp.csr_matrix(np.array([[1.0, 2.0, 0], [2.0, 4.0, 0], [0, 0, 1.0]]))
    with pytest.raises(FactorizationError):
        Factorization(a, ordering=np.array([2, 0, 1]))


def test_residual_check_raises_accuracy_error():
    # badly conditioned but nonsingular: the check must refuse an inaccurate answer
    n = 12
    hilbert = 1.0 / (np.arange(n)[:, None] + np.arange(n)[None, :] + 1)
    f = Factorization(hilbert)
    x = f.solve(np.ones(n), check=False)
    res = relative_residual(hilbert, x, np.ones(n))
    if res > 1e-10:
        with pytest.raises(AccuracyError):
            f.solve(np.ones(n))


def test_as_csr_rejects_nan():
    with pytest.raises(ValueError):
        as_csr(np.array([[np.nan]]))


def test_rhs_length_checked():
    with pytest.raises(ValueError):
        LinearSystem(sp.eye(3), np.ones(2))


def test_dirichlet_one_by_one():
    s = apply_dirichlet(LinearSystem(np.array([[2.0]]), np.array([4.0])), [0], [7.0])
    assert solve_direct(s)[0] == 7.0


def test_dirichlet_all_zero(rng):
    a = sp.random(6, 6, density=0.6, random_state=1) + 6 * sp.eye(6)
    s = apply_dirichlet(LinearSystem(a, rng.standard_normal(6)), np.arange(6), 0.0)
    np.testing.assert_array_equal(solve_direct(s), np.zeros(6))


def test_dirichlet_out_of_range():
    with pytest.raises(IndexError):
        apply_dirichlet(LinearSystem(sp.eye(3), np.ones(3)), [3], [0.0])


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=20, deadline=None)
def test_dirichlet_preserves_symmetry_and_attains_values(seed):
    rng = np.random.default_rng(seed)
    n = 8
    m = rng.standard_normal((n, n))
    a = m @ m.T + n * np.eye(n)
    dofs = rng.choice(n, size=3, replace=False)
    vals = rng.standard_normal(3)
    s = apply_dirichlet(LinearSystem(a, rng.standard_normal(n)), dofs, vals)
    d = s.matrix.toarray()
    np.testing.assert_array_equal(d, d.T)
    np.testing.assert_allclose(solve_direct(s)[dofs], vals, rtol=1e-13, atol=1e-14)


def _poisson_error(n):
    mesh = build_unit_square_mesh(n)
    space = build_space(mesh, "P1")
    rule = triangle_quadrature(6)
    k = assemble_form(space, space, stiffness_kernel(space, space), rule)
    exact = AnalyticEvaluator(lambda x, y, t: x * x - y * y)
    bd = space.boundary_dofs
    trace = interpolate_lagrange(exact, space).coefficients[bd]
    x = solve_direct(apply_dirichlet(LinearSystem(k, np.zeros(space.dof_count)), bd, trace))
    return l2_error(Field(space, x), exact, rule=rule)


def test_poisson_p1_harmonic_order_two():
    errs = [_poisson_error(n) for n in (4, 8, 16, 32)]
    assert errs[0] < 1e-2
    for o in eoc(errs)[1:]:
        assert 1.8 <= o <= 2.2


def test_stokes_taylor_hood_order_three():
    case = case_stokes()
    errs = []
    for n in (4, 8, 16):
        disc = Discretization(n)
        u, p, res = solve_stokes(case, disc)
        assert res <= 1e-10
        assert abs(disc.pressure_mean_vector @ p.coefficients) <= 1e-12
        errs.append(l2_error(u, case.u, rule=disc.rule))
    for o in eoc(errs)[1:]:
        assert 2.7 <= o <= 3.3


def test_stokes_zero_data_gives_zero():
    disc = Discretization(3)
    zero = AnalyticEvaluator.constant([0.0, 0.0], ncomp=2)
    case = case_stokes()
    from dataclasses import replace
    u, p, _ = solve_stokes(replace(case, f=zero), disc)
    assert np.max(np.abs(u.coefficients)) == 0.0
    assert np.max(np.abs(p.coefficients)) == 0.0


def test_saddle_dimension_mismatch():
    with pytest.raises(ValueError):
        build_saddle_system(sp.eye(4), sp.eye(2, 3), np.zeros(4), np.ones(2))


def test_saddle_layout():
    a = sp.eye(3) * 2.0
    b = sp.csr_matrix(np.array([[1.0, 0, -1.0], [0, 1.0, 0]]))
    s = build_saddle_system(a, b, np.ones(3), np.array([0.5, 0.5]))
    d = s.matrix.toarray()
    assert d.shape == (6, 6)
    np.testing.assert_array_equal(d[3:5, :3], b.toarray())
    np.testing.assert_array_equal(d[:3, 3:5], b.toarray().T)
    np.testing.assert_array_equal(d[5, 3:5], [0.5, 0.5])
    np.testing.assert_array_equal(s.rhs, [1, 1, 1, 0, 0, 0])


def test_nested_dissection_is_permutation():
    disc = Discretization(8)
    order = disc.saddle_ordering
    n = disc.V.dof_count + disc.Q.dof_count + 1
    np.testing.assert_array_equal(np.sort(order), np.arange(n))
    assert order[-1] == n - 1
    o2 = nested_dissection_order(disc.mass, disc.S.node_coordinates, leaf_size=4)
    np.testing.assert_array_equal(np.sort(o2), np.arange(disc.S.dof_count))


def test_ordering_must_be_permutation():
    with pytest.raises(ValueError):
        Factorization(sp.eye(3), ordering=np.array([0, 0, 1]))


def test_determinism_bitwise():
    case = case_stokes()
    u1, p1, _ = solve_stokes(case, Discretization(6))
    u2, p2, _ = solve_stokes(case, Discretization(6))
    assert np.array_equal(u1.coefficients, u2.coefficients)
    assert np.array_equal(p1.coefficients, p2.coefficients)


def test_matrix_market_round_trip(tmp_path):
    a = sp.random(5, 5, density=0.4, random_state=3).tocsr()
    write_matrix_market(tmp_path / "a.mtx", a, comment="test")
    back = scipy.io.mmread(str(tmp_path / "a.mtx"))
    np.testing.assert_array_equal(back.toarray(), a.toarray())
