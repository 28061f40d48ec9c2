"""Interpolation, L2 projection and error norms."""
from __future__ import annotations

import numpy as np

from .assembly import assemble_form, assemble_vector, mass_kernel, quad_points, source_kernel
from .quadrature import QuadratureRule, triangle_quadrature
from .space import AnalyticEvaluator, Field, FunctionSpace

DEFAULT_DEGREE = 6


def interpolate_lagrange(f: AnalyticEvaluator, space: FunctionSpace, t: float = 0.0) -> Field:
    """Nodal (Lagrange) interpolant of ``f(., t)``."""
    n = space.n_scalar
    xy = space.node_coordinates[:n]
    vals = np.asarray(f(xy[:, 0], xy[:, 1], t), dtype=float)
    if space.ncomp == 1:
        if vals.shape != (n,):
            raise ValueError(f"evaluator returned shape {vals.shape} for a scalar space")
        return Field(space, vals.copy())
    if vals.shape != (n, space.ncomp):
        raise ValueError(f"evaluator returned shape {vals.shape} for a vector space")
    return Field(space, vals.T.ravel())


def mass_matrix(space: FunctionSpace, rule: QuadratureRule | None = None):
    rule = rule or triangle_quadrature(DEFAULT_DEGREE)
    return assemble_form(space, space, mass_kernel(space, space), rule)


def project_l2(f, space: FunctionSpace, t: float = 0.0,
               rule: QuadratureRule | None = None) -> Field:
    """L2 projection of an analytic function or a Field onto ``space``.

    The result satisfies ``(f - P f, w) = 0`` for every basis function ``w``,
    with both sides evaluated by ``rule``.
    """
    from ..linsolve import LinearSystem, solve_direct

    rule = rule or triangle_quadrature(DEFAULT_DEGREE)
    mass = mass_matrix(space, rule)
    rhs = assemble_vector(space, source_kernel(space, f, t), rule)
    return Field(space, solve_direct(LinearSystem(mass, rhs)))


def _diff_at_qp(q, field, exact, t):
    vals = q.eval(field) if field is not None else 0.0
    if exact is None:
        return vals
    ex = q.eval(exact, t) if not np.isscalar(exact) else exact
    return vals - ex


def l2_error(field: Field | None, exact=None, t: float = 0.0,
             rule: QuadratureRule | None = None, mesh=None) -> float:
    """Quadrature approximation of ``||field - exact(., t)||_L2``.

    Either argument may be None (treated as zero); ``exact`` may also be a
    Field on the same mesh or a number.
    """
    rule = rule or triangle_quadrature(DEFAULT_DEGREE)
    mesh = mesh if mesh is not None else (field.space.mesh if field is not None else exact.space.mesh)
    q = quad_points(mesh, rule)
    d = _diff_at_qp(q, field, exact, t)
    d = np.broadcast_to(d, q.shape + np.shape(d)[2:])
    sq = d ** 2 if d.ndim == 2 else np.sum(d ** 2, axis=-1)
    return float(np.sqrt(q.integrate(sq)))


def l2_norm(field: Field, rule: QuadratureRule | None = None) -> float:
    return l2_error(field, None, rule=rule)


def h1_seminorm_error(field: Field, exact: AnalyticEvaluator | None = None, t: float = 0.0,
                      rule: QuadratureRule | None = None) -> float:
    """``||grad(field - exact)||_L2``; ``exact`` needs an analytic gradient."""
    rule = rule or triangle_quadrature(DEFAULT_DEGREE)
    q = quad_points(field.space.mesh, rule)
    d = q.grad(field)
    if exact is not None:
        d = d - q.grad(exact, t)
    axes = tuple(range(2, d.ndim))
    return float(np.sqrt(q.integrate(np.sum(d ** 2, axis=axes))))
