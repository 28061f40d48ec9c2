"""
Meshes, Lagrange spaces and approximation order
===============================================

A first look at the discretization: a structured triangulation of the unit
square, the P1 and P2 spaces built on it, and how fast interpolation and L2
projection converge for a smooth function.
"""
# %%
# The mesh
# --------
# ``build_unit_square_mesh(n)`` splits every cell of an ``n x n`` grid along
# its rising diagonal.
import numpy as np

from vdns.fem import (AnalyticEvaluator, build_space, interpolate_lagrange, l2_error,
                      project_l2, write_vtk_fields)
from vdns.harness import eoc
from vdns.mesh import build_unit_square_mesh

mesh = build_unit_square_mesh(4)
print(mesh.n_vertices, "vertices,", mesh.n_triangles, "triangles,", mesh.n_edges, "edges")
print("h =", mesh.h)

# %%
# Spaces and degrees of freedom
# -----------------------------
# P2 carries one unknown per vertex and one per edge; the velocity space
# stacks two copies (all x components, then all y components).
for kind in ("P1", "P2", "P2-vector2"):
    space = build_space(mesh, kind)
    print(f"{kind:11s} {space.dof_count:4d} dofs, {len(space.boundary_dofs)} on the boundary")

# %%
# Convergence of interpolation and projection
# -------------------------------------------
bump = AnalyticEvaluator(lambda x, y, t: np.sin(np.pi * x) * np.sin(np.pi * y))
for kind in ("P1", "P2"):
    e_int, e_proj = [], []
    for n in (8, 16, 32):
        space = build_space(build_unit_square_mesh(n), kind)
        e_int.append(l2_error(interpolate_lagrange(bump, space), bump))
        e_proj.append(l2_error(project_l2(bump, space), bump))
    print(kind, "interpolation orders", np.round(eoc(e_int)[1:], 2),
          "projection orders", np.round(eoc(e_proj)[1:], 2))

# %%
# Writing fields for a viewer
# ---------------------------
# P2 fields are written on the four-times refined P1 mesh whose vertices are
# exactly the P2 nodes, so nothing is lost in the file.
field = interpolate_lagrange(bump, build_space(mesh, "P2"))
print(write_vtk_fields("bump.vtk", {"bump": field}))
