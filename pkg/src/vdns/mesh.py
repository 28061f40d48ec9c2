"""Structured triangulations of the unit square.

Vertices are numbered row-major (x fastest); every grid cell is split along
its lower-left to upper-right diagonal, so the topology is a deterministic
function of ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# local edge k of a triangle is the one opposite local vertex k
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangle mesh with edge topology.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    edges : (ne, 2) int array, sorted vertex pairs
    triangle_edges : (nt, 3) int array, edge opposite each local vertex
    boundary_vertex_flags, boundary_edge_flags : bool arrays
    h : maximum triangle diameter
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(repr=False)
    triangle_edges: np.ndarray = field(repr=False)
    boundary_vertex_flags: np.ndarray = field(repr=False)
    boundary_edge_flags: np.ndarray = field(repr=False)
    h: float = 0.0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])


def _on_square_boundary(xy: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    return (np.abs(x) < tol) | (np.abs(x - 1) < tol) | (np.abs(y) < tol) | (np.abs(y - 1) < tol)


def _edge_topology(triangles: np.ndarray):
    local = np.sort(triangles[:, LOCAL_EDGES], axis=2).reshape(-1, 2)
    edges, inverse, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def mesh_from_arrays(vertices, triangles) -> Mesh:
    """Build a :class:`Mesh` (edges, flags, h) from raw vertex/triangle arrays.

    Triangles with negative orientation are flipped. Boundary edges are the
    edges with a single incident triangle; a vertex is on the boundary iff
    it touches a boundary edge.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)[:, :2]
    triangles = np.array(triangles, dtype=np.int64)
    p = vertices[triangles]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    if np.any(area2 == 0):
        raise ValueError("mesh contains degenerate triangles")
    flip = area2 < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    edges, tri_edges, counts = _edge_topology(triangles)
    if np.any(counts > 2):
        raise ValueError("non-manifold mesh: an edge is shared by more than two triangles")
    bedge = counts == 1
    bvert = np.zeros(len(vertices), dtype=bool)
    bvert[edges[bedge].ravel()] = True

    p = vertices[triangles]
    diam = np.max(np.stack([np.linalg.norm(p[:, i] - p[:, j], axis=1)
                            for i, j in LOCAL_EDGES]), axis=0)
    for arr in (vertices, triangles, edges, tri_edges, bvert, bedge):
        arr.setflags(write=False)
    return Mesh(vertices, triangles, edges, tri_edges, bvert, bedge, float(diam.max()))


def build_unit_square_mesh(n: int) -> Mesh:
    """Uniform ``n x n`` grid on [0, 1]^2, two triangles per cell.

    >>> m = build_unit_square_mesh(2)
    >>> m.n_vertices, m.n_triangles, m.n_edges
    (9, 8, 16)
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"mesh parameter n must be a positive integer, got {n!r}")
    n = int(n)
    g = np.arange(n + 1) / n
    xx, yy = np.meshgrid(g, g)  # row-major: index = j*(n+1) + i
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.divmod(np.arange(n * n), n)
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    mesh = mesh_from_arrays(vertices, triangles)
    # snap to the exact value for the structured grid
    object.__setattr__(mesh, "h", float(np.sqrt(2.0) / n))
    return mesh


def boundary_classification(mesh: Mesh, geometric: bool = True):
    """Per-vertex and per-edge boundary flags.

    With ``geometric=True`` (the default) an entity is flagged iff it lies on
    a side of the unit square; otherwise the topological flags stored on the
    mesh (incidence counts) are returned.
    """
    if not geometric:
        return mesh.boundary_vertex_flags.copy(), mesh.boundary_edge_flags.copy()
    vflags = _on_square_boundary(mesh.vertices)
    a, b = mesh.edges[:, 0], mesh.edges[:, 1]
    va, vb = mesh.vertices[a], mesh.vertices[b]
    same_side = (((np.abs(va[:, 0]) < 1e-12) & (np.abs(vb[:, 0]) < 1e-12))
                 | ((np.abs(va[:, 0] - 1) < 1e-12) & (np.abs(vb[:, 0] - 1) < 1e-12))
                 | ((np.abs(va[:, 1]) < 1e-12) & (np.abs(vb[:, 1]) < 1e-12))
                 | ((np.abs(va[:, 1] - 1) < 1e-12) & (np.abs(vb[:, 1] - 1) < 1e-12)))
    return vflags, same_side


# --- legacy VTK ------------------------------------------------------------

VTK_TRIANGLE = 5


def write_vtk_mesh(mesh: Mesh, path, title: str = "vdns mesh", point_data=None) -> Path:
    """Write an ASCII legacy VTK unstructured grid (cell type 5).

    ``point_data`` maps names to arrays of length ``n_vertices`` (scalars) or
    ``(n_vertices, 2)`` (vectors, padded with z=0).
    """
    path = Path(path)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    nt = mesh.n_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += [str(VTK_TRIANGLE)] * nt
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape == (mesh.n_vertices,):
                lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                lines += [f"{v:.17g}" for v in values]
            elif values.shape == (mesh.n_vertices, 2):
                lines.append(f"VECTORS {name} double")
                lines += [f"{u:.17g} {v:.17g} 0" for u, v in values]
            else:
                raise ValueError(f"point data {name!r} has shape {values.shape}, "
                                 f"expected ({mesh.n_vertices},) or ({mesh.n_vertices}, 2)")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
    return path


def read_vtk_mesh(path) -> Mesh:
    """Read the triangles of an ASCII legacy VTK unstructured grid."""
    tokens = Path(path).read_text().split("\n")
    it = iter(tokens)
    points = cells = types = None
    for line in it:
        words = line.split()
        if not words:
            continue
        key = words[0].upper()
        if key == "POINTS":
            npts = int(words[1])
            vals = []
            while len(vals) < 3 * npts:
                vals += next(it).split()
            points = np.array(vals, dtype=float).reshape(npts, 3)
        elif key == "CELLS":
            ncell, size = int(words[1]), int(words[2])
            vals = []
            while len(vals) < size:
                vals += next(it).split()
            cells = []
            k = 0
            for _ in range(ncell):
                m = int(vals[k])
                cells.append([int(v) for v in vals[k + 1:k + 1 + m]])
                k += m + 1
        elif key == "CELL_TYPES":
            ncell = int(words[1])
            vals = []
            while len(vals) < ncell:
                vals += next(it).split()
            types = np.array(vals, dtype=int)
    if points is None or cells is None:
        raise ValueError(f"{path}: missing POINTS or CELLS section")
    if types is not None and np.any(types != VTK_TRIANGLE):
        raise ValueError(f"{path}: only triangle cells (type {VTK_TRIANGLE}) are supported")
    return mesh_from_arrays(points[:, :2], np.array(cells, dtype=np.int64))
