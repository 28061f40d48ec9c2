from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vdns.fem import eval_reference_basis, reference_nodes, triangle_quadrature
from vdns.fem.quadrature import SUPPORTED_DEGREES


def exact_monomial(a, b):
    """Integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!."""
    return Fraction(factorial(a) * factorial(b), factorial(a + b + 2))


def integrate(rule, a, b):
    pts = rule.reference_points
    return 0.5 * float(np.sum(rule.weights * pts[:, 0] ** a * pts[:, 1] ** b))


@pytest.mark.parametrize("degree", SUPPORTED_DEGREES)
def test_rules_integrate_monomials_exactly(degree):
    rule = triangle_quadrature(degree)
    assert rule.exact_degree >= degree
    assert np.all(rule.weights > 0)
    assert np.all(rule.points >= 0)
    for total in range(rule.exact_degree + 1):
        for a in range(total + 1):
            assert integrate(rule, a, total - a) == pytest.approx(
                float(exact_monomial(a, total - a)), rel=1e-13, abs=1e-16)


def test_x4y2_value():
    assert exact_monomial(4, 2) == Fraction(1, 840)
    assert integrate(triangle_quadrature(6), 4, 2) == pytest.approx(1 / 840, rel=1e-13)


def test_unsupported_degree():
    with pytest.raises(ValueError, match="supported"):
        triangle_quadrature(42)


@pytest.mark.parametrize("kind", ["P1", "P2"])
def test_kronecker_property(kind):
    nodes = reference_nodes(kind)
    vals, _ = eval_reference_basis(kind, nodes)
    np.testing.assert_allclose(vals, np.eye(len(nodes)), atol=1e-15)


@given(st.lists(st.floats(0, 1), min_size=2, max_size=2))
@settings(max_examples=50, deadline=None)
def test_partition_of_unity_random(xy):
    x, y = xy
    if x + y > 1:
        x, y = 1 - x, 1 - y
    bary = np.array([[1 - x - y, x, y]])
    bary = np.clip(bary, 0, 1)
    bary /= bary.sum()
    for kind in ("P1", "P2"):
        vals, grads = eval_reference_basis(kind, bary)
        assert vals.sum() == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-13)


def test_partition_of_unity_1000_points(rng):
    b = rng.dirichlet([1, 1, 1], 1000)
    for kind in ("P1", "P2"):
        vals, _ = eval_reference_basis(kind, b)
        np.testing.assert_allclose(vals.sum(axis=1), 1.0, atol=1e-14)


def test_basis_rejects_points_outside():
    with pytest.raises(ValueError):
        eval_reference_basis("P2", np.array([[1.2, -0.2, 0.0]]))
