"""Field export to ASCII legacy VTK.

Quadratic fields are written at their own nodes on a P1 mesh obtained by
splitting each triangle into four through its edge midpoints.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..mesh import Mesh, write_vtk_mesh
from .space import Field

_HEADER = "vdns fields; P2 values at P2 nodes on a 4x refined P1 mesh"


def refined_p1_mesh(mesh: Mesh) -> Mesh:
    """Split every triangle into four; new vertices are the edge midpoints.

    Vertex ``nv + e`` of the result is the midpoint of edge ``e``, so it
    coincides with the P2 node numbering.
    """
    from ..mesh import mesh_from_arrays

    nv = mesh.n_vertices
    v = mesh.triangles
    m = nv + mesh.triangle_edges  # m[:, k] opposite vertex k
    tris = np.concatenate([
        np.column_stack([v[:, 0], m[:, 2], m[:, 1]]),
        np.column_stack([v[:, 1], m[:, 0], m[:, 2]]),
        np.column_stack([v[:, 2], m[:, 1], m[:, 0]]),
        np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
    ])
    verts = np.vstack([mesh.vertices, mesh.edge_midpoints()])
    return mesh_from_arrays(verts, tris)


def _nodal_on_refined(field: Field) -> np.ndarray:
    space = field.space
    vals = field.nodal_values()
    if space.element == "P2":
        return vals
    mesh = space.mesh
    mids = 0.5 * (vals[mesh.edges[:, 0]] + vals[mesh.edges[:, 1]])
    return np.concatenate([vals, mids])


def write_vtk_fields(path, fields: dict, title: str = _HEADER) -> Path:
    """Write Fields (P1 or P2, scalar or vector) sharing one mesh."""
    if not fields:
        raise ValueError("no fields to write")
    mesh = next(iter(fields.values())).space.mesh
    if any(f.space.mesh is not mesh for f in fields.values()):
        raise ValueError("all fields must live on the same mesh")
    fine = refined_p1_mesh(mesh)
    data = {name: _nodal_on_refined(f) for name, f in fields.items()}
    return write_vtk_mesh(fine, path, title=title, point_data=data)
