"""Lagrange function spaces, fields and analytic evaluators."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from ..mesh import Mesh, boundary_classification
from .basis import N_LOCAL

# accepted spellings -> (element, number of components)
_KINDS = {
    "P1": ("P1", 1), "P1-scalar": ("P1", 1),
    "P2": ("P2", 1), "P2-scalar": ("P2", 1),
    "P2-vector": ("P2", 2), "P2-vector2": ("P2", 2),
}


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """Continuous Lagrange space on a triangle mesh.

    Vector spaces use a block layout: all x-component DOFs first, then all
    y-component DOFs. ``element_dof_map`` follows the same layout per triangle.
    """

    kind: str
    element: str
    ncomp: int
    mesh: Mesh
    n_scalar: int
    element_dof_map: np.ndarray
    boundary_dofs: np.ndarray
    node_coordinates: np.ndarray

    @property
    def dof_count(self) -> int:
        return self.ncomp * self.n_scalar

    @property
    def n_local(self) -> int:
        return N_LOCAL[self.element]

    @property
    def scalar_dof_map(self) -> np.ndarray:
        return self.element_dof_map[:, :self.n_local]

    def __repr__(self):
        return f"FunctionSpace({self.kind!r}, dofs={self.dof_count})"


def build_space(mesh: Mesh, kind: str) -> FunctionSpace:
    """P1-scalar, P2-scalar or P2-vector2 space on ``mesh``."""
    if kind not in _KINDS:
        raise ValueError(f"unknown space kind {kind!r}; expected one of {sorted(_KINDS)}")
    element, ncomp = _KINDS[kind]
    bverts, bedges = boundary_classification(mesh)
    if element == "P1":
        n_scalar = mesh.n_vertices
        dmap = mesh.triangles.copy()
        coords = mesh.vertices.copy()
        bdofs = np.flatnonzero(bverts)
    else:
        nv = mesh.n_vertices
        n_scalar = nv + mesh.n_edges
        dmap = np.hstack([mesh.triangles, nv + mesh.triangle_edges])
        coords = np.vstack([mesh.vertices, mesh.edge_midpoints()])
        bdofs = np.concatenate([np.flatnonzero(bverts), nv + np.flatnonzero(bedges)])
    if ncomp > 1:
        dmap = np.hstack([dmap + c * n_scalar for c in range(ncomp)])
        bdofs = np.concatenate([bdofs + c * n_scalar for c in range(ncomp)])
        coords = np.tile(coords, (ncomp, 1))
    for arr in (dmap, bdofs, coords):
        arr.setflags(write=False)
    canonical = {("P1", 1): "P1-scalar", ("P2", 1): "P2-scalar", ("P2", 2): "P2-vector2"}
    return FunctionSpace(canonical[element, ncomp], element, ncomp, mesh, n_scalar,
                         dmap, np.sort(bdofs), coords)


@lru_cache(maxsize=16)
def _scalar_space_cached(mesh: Mesh, element: str) -> FunctionSpace:
    return build_space(mesh, element)


def scalar_space(space: FunctionSpace) -> FunctionSpace:
    """The scalar space underlying a (possibly vector) space."""
    if space.ncomp == 1:
        return space
    return _scalar_space_cached(space.mesh, space.element)


@dataclass(eq=False)
class Field:
    space: FunctionSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.dof_count,):
            raise ValueError(f"coefficient vector has shape {self.coefficients.shape}, "
                             f"space has {self.space.dof_count} DOFs")

    @classmethod
    def zeros(cls, space: FunctionSpace) -> "Field":
        return cls(space, np.zeros(space.dof_count))

    def copy(self) -> "Field":
        return Field(self.space, self.coefficients.copy())

    def component(self, c: int) -> np.ndarray:
        n = self.space.n_scalar
        return self.coefficients[c * n:(c + 1) * n]

    def nodal_values(self) -> np.ndarray:
        """Coefficients reshaped to (n_scalar,) or (n_scalar, ncomp)."""
        if self.space.ncomp == 1:
            return self.coefficients
        return self.coefficients.reshape(self.space.ncomp, -1).T


@dataclass(frozen=True)
class AnalyticEvaluator:
    """A field given in closed form as ``value(x, y, t)``.

    Scalar evaluators return arrays shaped like ``x``; vector evaluators add a
    trailing axis of length 2. ``grad`` appends a further trailing axis
    (d/dx, d/dy); ``dt`` has the shape of ``value``.
    """

    value: Callable
    grad: Optional[Callable] = None
    dt: Optional[Callable] = None
    ncomp: int = 1

    def __call__(self, x, y, t=0.0):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.asarray(self.value(x, y, t), dtype=float)

    @classmethod
    def constant(cls, c, ncomp: int = 1) -> "AnalyticEvaluator":
        c = np.asarray(c, dtype=float)

        def value(x, y, t):
            shape = np.shape(x) + ((ncomp,) if ncomp > 1 else ())
            return np.broadcast_to(c, shape).copy()

        def grad(x, y, t):
            shape = np.shape(x) + ((ncomp,) if ncomp > 1 else ()) + (2,)
            return np.zeros(shape)

        return cls(value, grad, lambda x, y, t: 0.0 * value(x, y, t), ncomp)
