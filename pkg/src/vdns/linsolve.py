"""Sparse direct solves, Dirichlet elimination and saddle-point systems.

Matrices are ``scipy.sparse.csr_matrix`` in canonical form (sorted, unique
column indices). Factorization is SuperLU with threshold partial pivoting.
Without an explicit ordering SuperLU's COLAMD column ordering is used;
finite element callers pass a symmetric nested-dissection ordering built
from the DOF coordinates, which keeps the fill of saddle-point factors low.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10


class FactorizationError(RuntimeError):
    """The matrix is singular to working precision."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class AccuracyError(RuntimeError):
    """A computed solution failed the relative residual check."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def as_csr(a) -> sp.csr_matrix:
    a = sp.csr_matrix(a, dtype=float)
    a.sum_duplicates()
    a.sort_indices()
    if not np.all(np.isfinite(a.data)):
        raise ValueError("matrix has non-finite entries")
    return a


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    constrained_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.matrix = as_csr(self.matrix)
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.matrix.shape[0] != self.rhs.shape[0]:
            raise ValueError(f"rhs length {self.rhs.shape[0]} does not match "
                             f"matrix dimension {self.matrix.shape}")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def apply_dirichlet(system: LinearSystem, dofs, values) -> LinearSystem:
    """Symmetric elimination of prescribed DOFs.

    Constrained rows and columns are zeroed, a unit diagonal is placed on
    each constrained row with the prescribed value on the right-hand side,
    and the removed column contributions are moved to the right-hand side.
    """
    a, b = system.matrix, system.rhs
    n = a.shape[0]
    dofs = np.asarray(dofs, dtype=np.int64).ravel()
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape).copy()
    if dofs.size and (dofs.min() < 0 or dofs.max() >= n):
        raise IndexError(f"constrained DOF out of range [0, {n})")
    g = np.zeros(n)
    g[dofs] = values
    keep = np.ones(n)
    keep[dofs] = 0.0
    d_keep = sp.diags(keep)
    new_b = b - a @ g
    new_b[dofs] = values
    new_a = d_keep @ a @ d_keep + sp.diags(1.0 - keep)
    all_dofs = np.concatenate([system.constrained_dofs, dofs])
    all_vals = np.concatenate([system.constrained_values, values])
    return LinearSystem(new_a, new_b, all_dofs, all_vals)


def nested_dissection_order(graph, coords, priority=None, leaf_size: int = 64) -> np.ndarray:
    """Symmetric fill-reducing ordering by recursive coordinate bisection.

    Each block is split at the median of its longest coordinate extent; the
    nodes of the upper half adjacent to the lower half form the separator,
    which is numbered after both halves. Within every leaf and separator,
    nodes are sorted by ``priority`` (stable), e.g. to eliminate velocity
    unknowns before the pressure unknowns coupled to them.
    """
    graph = sp.csr_matrix(graph)
    coords = np.asarray(coords, dtype=float)
    n = graph.shape[0]
    if coords.shape[0] != n:
        raise ValueError("one coordinate row per graph node is required")
    blocks = []

    def split(nodes):
        if len(nodes) <= leaf_size:
            blocks.append(nodes)
            return
        pts = coords[nodes]
        axis = int(np.argmax(np.ptp(pts, axis=0)))
        lower = pts[:, axis] < np.median(pts[:, axis])
        if lower.all() or not lower.any():
            blocks.append(nodes)
            return
        left, right = nodes[lower], nodes[~lower]
        indicator = np.zeros(n)
        indicator[left] = 1.0
        touches = (graph[right] @ indicator) != 0
        split(left)
        split(right[~touches])
        blocks.append(right[touches])

    split(np.arange(n))
    if priority is not None:
        priority = np.asarray(priority)
        blocks = [b[np.argsort(priority[b], kind="stable")] for b in blocks]
    return np.concatenate(blocks)


class Factorization:
    """Reusable LU factors of a square sparse matrix.

    ``ordering`` is an optional symmetric permutation applied before
    factorization; with it, the diagonal is preferred as pivot unless it is
    smaller than ``pivot_threshold`` times the largest entry of its column.
    """

    def __init__(self, matrix, ordering=None, pivot_threshold: float = 1e-3):
        matrix = as_csr(matrix)
        n, m = matrix.shape
        if n != m:
            raise ValueError(f"matrix must be square, got {matrix.shape}")
        self.matrix = matrix
        self.ordering = None if ordering is None else np.asarray(ordering)
        try:
            if self.ordering is None:
                self._lu = spla.splu(matrix.tocsc(), permc_spec="COLAMD")
            else:
                if not np.array_equal(np.sort(self.ordering), np.arange(n)):
                    raise ValueError("ordering is not a permutation of the matrix indices")
                perm = self.ordering
                self._lu = spla.splu(matrix[perm][:, perm].tocsc(), permc_spec="NATURAL",
                                     diag_pivot_thresh=pivot_threshold,
                                     options={"SymmetricMode": True})
        except RuntimeError as exc:
            pivot = _singular_pivot(matrix)
            where = f" (pivot in column {pivot})" if pivot is not None else ""
            raise FactorizationError(f"LU factorization failed: {exc}{where}", pivot) from exc
        udiag = np.abs(self._lu.U.diagonal())
        scale = udiag.max() if udiag.size else 0.0
        bad = np.flatnonzero(udiag <= n * np.finfo(float).eps * scale)
        if scale == 0.0 or bad.size:
            k = int(self._lu.perm_c[bad[0]]) if bad.size else 0
            pivot = int(self.ordering[k]) if self.ordering is not None else k
            raise FactorizationError(f"matrix is singular to working precision "
                                     f"(pivot in column {pivot})", pivot=pivot)

    def solve(self, rhs, check: bool = True) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if self.ordering is None:
            x = self._lu.solve(rhs)
        else:
            x = np.empty_like(rhs)
            x[self.ordering] = self._lu.solve(rhs[self.ordering])
        if check:
            residual = relative_residual(self.matrix, x, rhs)
            if not residual <= RESIDUAL_TOL:
                raise AccuracyError(f"relative residual {residual:.3e} exceeds {RESIDUAL_TOL:g}",
                                    residual)
        return x


def _singular_pivot(matrix, max_dense: int = 4000):
    """Column of the first vanishing pivot of a dense partial-pivoting LU, if affordable."""
    import warnings

    import scipy.linalg

    n = matrix.shape[0]
    if n > max_dense:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, _ = scipy.linalg.lu_factor(matrix.toarray(), check_finite=False)
    d = np.abs(np.diag(lu))
    bad = np.flatnonzero(d <= n * np.finfo(float).eps * max(d.max(), 1e-300))
    return int(bad[0]) if bad.size else None


def relative_residual(a, x, b) -> float:
    bnorm = np.linalg.norm(b)
    r = np.linalg.norm(a @ x - b)
    return float(r / bnorm) if bnorm > 0 else float(r)


def solve_direct(system: LinearSystem, return_residual: bool = False, ordering=None):
    """Solve with sparse LU; the relative residual is checked before returning."""
    x = Factorization(system.matrix, ordering).solve(system.rhs)
    if return_residual:
        return x, relative_residual(system.matrix, x, system.rhs)
    return x


def pressure_mean_vector(pressure_space, rule=None) -> np.ndarray:
    """Integrals of the pressure basis functions."""
    from .fem import assemble_vector, triangle_quadrature

    rule = rule or triangle_quadrature(6)

    def kernel(q):
        return np.broadcast_to(q.basis(pressure_space).val[None], q.shape + (pressure_space.n_local,))

    return assemble_vector(pressure_space, kernel, rule)


def build_saddle_system(a, b, f, m, g=None) -> LinearSystem:
    """Block system ``[[A, B^T, 0], [B, 0, m], [0, m^T, 0]]``.

    ``b`` maps velocity to pressure test functions (shape np x nu); ``m`` holds
    the integrals of the pressure basis so that the last row enforces a zero
    pressure mean. ``g`` is an optional pressure-row right-hand side.
    """
    a, b = as_csr(a), as_csr(b)
    nu, npr = a.shape[0], b.shape[0]
    m = np.asarray(m, dtype=float).reshape(-1)
    f = np.asarray(f, dtype=float)
    if a.shape != (nu, nu) or b.shape != (npr, nu) or m.shape != (npr,) or f.shape != (nu,):
        raise ValueError(f"inconsistent saddle blocks: A{a.shape}, B{b.shape}, "
                         f"m{m.shape}, f{f.shape}")
    mcol = sp.csr_matrix(m.reshape(-1, 1))
    mat = sp.bmat([[a, b.T, None], [b, None, mcol], [None, mcol.T, None]], format="csr")
    rhs = np.concatenate([f, np.zeros(npr) if g is None else g, [0.0]])
    return LinearSystem(mat, rhs)


def write_matrix_market(path, matrix, comment: str = "") -> None:
    """Dump a sparse matrix in MatrixMarket coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
