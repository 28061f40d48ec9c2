"""Vectorized element-loop assembly.

A kernel is a callable ``kernel(q)`` receiving a :class:`QuadPoints` object
and returning integrand values at every quadrature point of every element:

* bilinear forms: shape ``(n_elements, n_qp, n_test, n_trial)``
* linear forms:   shape ``(n_elements, n_qp, n_test)``

The assembler multiplies by the quadrature weights and element areas,
then scatters the local contributions in element order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..mesh import Mesh
from .basis import eval_reference_basis
from .quadrature import QuadratureRule
from .space import AnalyticEvaluator, Field, FunctionSpace


@lru_cache(maxsize=16)
def element_geometry(mesh: Mesh):
    """Areas ``(nt,)`` and inverse-transposed Jacobians ``(nt, 2, 2)``."""
    p = mesh.vertices[mesh.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv_t = np.empty_like(jac)
    inv_t[:, 0, 0] = jac[:, 1, 1] / det
    inv_t[:, 0, 1] = -jac[:, 1, 0] / det
    inv_t[:, 1, 0] = -jac[:, 0, 1] / det
    inv_t[:, 1, 1] = jac[:, 0, 0] / det
    return 0.5 * det, inv_t


@dataclass
class Basis:
    """Basis functions of one space at the quadrature points.

    Scalar spaces: ``val`` (nq, nloc), ``grad`` (ne, nq, nloc, 2).
    Vector spaces: ``val`` (nq, ndof, ncomp), ``grad`` (ne, nq, ndof, ncomp, 2).
    """

    val: np.ndarray
    grad: np.ndarray


class QuadPoints:
    """Quadrature data for one mesh and rule, handed to kernels."""

    def __init__(self, mesh: Mesh, rule: QuadratureRule):
        self.mesh = mesh
        self.rule = rule
        area, self.inv_jac_t = element_geometry(mesh)
        self.area = area
        p = mesh.vertices[mesh.triangles]  # (ne, 3, 2)
        self.x = np.einsum("qk,ekd->eqd", rule.points, p)
        self.dx = area[:, None] * rule.weights[None, :]
        self._tab: dict = {}

    @property
    def shape(self):
        return self.dx.shape

    def _scalar_tab(self, element: str):
        if element not in self._tab:
            val, rgrad = eval_reference_basis(element, self.rule.points)
            grad = np.einsum("eij,qkj->eqki", self.inv_jac_t, rgrad)
            self._tab[element] = (val, grad)
        return self._tab[element]

    def basis(self, space: FunctionSpace) -> Basis:
        val, grad = self._scalar_tab(space.element)
        if space.ncomp == 1:
            return Basis(val, grad)
        nq, nloc = val.shape
        nc = space.ncomp
        vval = np.zeros((nq, nc * nloc, nc))
        vgrad = np.zeros(grad.shape[:2] + (nc * nloc, nc, 2))
        for c in range(nc):
            vval[:, c * nloc:(c + 1) * nloc, c] = val
            vgrad[:, :, c * nloc:(c + 1) * nloc, c, :] = grad
        return Basis(vval, vgrad)

    def eval(self, f, t: float = 0.0) -> np.ndarray:
        """Values of a Field or AnalyticEvaluator at the quadrature points.

        Returns (ne, nq) for scalars and (ne, nq, 2) for vectors.
        """
        if isinstance(f, Field):
            space = f.space
            val, _ = self._scalar_tab(space.element)
            nodal = f.nodal_values()[space.scalar_dof_map]  # (ne, nloc[, nc])
            if space.ncomp == 1:
                return nodal @ val.T
            return np.einsum("qk,ekc->eqc", val, nodal)
        return f(self.x[..., 0], self.x[..., 1], t)

    def grad(self, f, t: float = 0.0) -> np.ndarray:
        """Gradients at the quadrature points, trailing axis (d/dx, d/dy)."""
        if isinstance(f, Field):
            space = f.space
            _, grad = self._scalar_tab(space.element)
            nodal = f.nodal_values()[space.scalar_dof_map]
            if space.ncomp == 1:
                return np.einsum("eqkd,ek->eqd", grad, nodal)
            return np.einsum("eqkd,ekc->eqcd", grad, nodal)
        if f.grad is None:
            raise ValueError("analytic evaluator has no gradient")
        return f.grad(self.x[..., 0], self.x[..., 1], t)

    def integrate(self, values: np.ndarray) -> float:
        """Integral over the domain of values given per quadrature point."""
        return float(np.sum(self.dx * values))


@lru_cache(maxsize=32)
def _quad_points(mesh: Mesh, rule: QuadratureRule) -> QuadPoints:
    return QuadPoints(mesh, rule)


def quad_points(mesh: Mesh, rule: QuadratureRule) -> QuadPoints:
    return _quad_points(mesh, rule)


def _check_same_mesh(*spaces):
    if any(s.mesh is not spaces[0].mesh for s in spaces):
        raise ValueError("spaces live on different meshes")


def assemble_form(trial: FunctionSpace, test: FunctionSpace, kernel, rule: QuadratureRule):
    """Assemble a bilinear form into a CSR matrix of shape (test dofs, trial dofs)."""
    _check_same_mesh(trial, test)
    q = quad_points(test.mesh, rule)
    integrand = np.asarray(kernel(q))
    ne, nq = q.shape
    nte, ntr = test.element_dof_map.shape[1], trial.element_dof_map.shape[1]
    if integrand.shape != (ne, nq, nte, ntr):
        raise ValueError(f"kernel returned shape {integrand.shape}, expected "
                         f"{(ne, nq, nte, ntr)} (elements, points, test dofs, trial dofs)")
    local = np.einsum("eq,eqij->eij", q.dx, integrand)
    return local_to_csr(local, test.element_dof_map, trial.element_dof_map,
                        (test.dof_count, trial.dof_count))


def local_to_csr(local, test_map, trial_map, shape):
    """Scatter per-element matrices (ne, nte, ntr) into a canonical CSR matrix."""
    ne, nte, ntr = local.shape
    rows = np.broadcast_to(test_map[:, :, None], (ne, nte, ntr)).ravel()
    cols = np.broadcast_to(trial_map[:, None, :], (ne, nte, ntr)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_vector(test: FunctionSpace, kernel, rule: QuadratureRule) -> np.ndarray:
    """Assemble a linear form into a dense vector."""
    q = quad_points(test.mesh, rule)
    integrand = np.asarray(kernel(q))
    ne, nq = q.shape
    nte = test.element_dof_map.shape[1]
    if integrand.shape != (ne, nq, nte):
        raise ValueError(f"kernel returned shape {integrand.shape}, expected {(ne, nq, nte)}")
    local = np.einsum("eq,eqi->ei", q.dx, integrand)
    out = np.zeros(test.dof_count)
    np.add.at(out, test.element_dof_map.ravel(), local.ravel())
    return out


# --- common kernels ----------------------------------------------------------

def mass_kernel(trial: FunctionSpace, test: FunctionSpace, weight=None):
    """``(w * u, v)``; ``weight`` is None or an array (ne, nq)."""

    def kernel(q):
        bu, bv = q.basis(trial), q.basis(test)
        if trial.ncomp == 1:
            prod = np.einsum("qi,qj->qij", bv.val, bu.val)
        else:
            prod = np.einsum("qic,qjc->qij", bv.val, bu.val)
        w = np.ones(q.shape) if weight is None else weight
        return w[:, :, None, None] * prod[None]

    return kernel


def stiffness_kernel(trial: FunctionSpace, test: FunctionSpace, weight=None):
    """``(w * grad u, grad v)`` (full Frobenius product for vectors)."""

    def kernel(q):
        bu, bv = q.basis(trial), q.basis(test)
        if trial.ncomp == 1:
            prod = np.einsum("eqid,eqjd->eqij", bv.grad, bu.grad)
        else:
            prod = np.einsum("eqicd,eqjcd->eqij", bv.grad, bu.grad)
        return prod if weight is None else weight[:, :, None, None] * prod

    return kernel


def source_kernel(test: FunctionSpace, f, t: float = 0.0):
    """``(f, v)`` for a Field or AnalyticEvaluator ``f``."""

    def kernel(q):
        fq = q.eval(f, t)
        bv = q.basis(test)
        if test.ncomp == 1:
            return fq[:, :, None] * bv.val[None]
        return np.einsum("eqc,qic->eqi", fq, bv.val)

    return kernel
