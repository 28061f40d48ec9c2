"""Lagrange shape functions on the reference triangle.

Local numbering: vertices 0, 1, 2 at (0,0), (1,0), (0,1); for P2 the edge
nodes 3, 4, 5 sit at the midpoints of the edges opposite vertices 0, 1, 2.
"""
from __future__ import annotations

import numpy as np

# gradient of each barycentric coordinate w.r.t. reference (x, y)
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_EDGE = ((1, 2), (2, 0), (0, 1))

N_LOCAL = {"P1": 3, "P2": 6}


def _check_bary(bary):
    bary = np.asarray(bary, dtype=float)
    if bary.shape[-1] != 3:
        raise ValueError(f"barycentric points need 3 coordinates, got shape {bary.shape}")
    if np.any(bary < -1e-12) or np.any(np.abs(bary.sum(axis=-1) - 1.0) > 1e-12):
        raise ValueError("barycentric coordinates must be nonnegative and sum to 1")
    return bary


def eval_reference_basis(kind: str, bary):
    """Basis values and reference gradients at barycentric point(s).

    Parameters
    ----------
    kind : {"P1", "P2"}
    bary : array_like, shape (3,) or (npts, 3)

    Returns
    -------
    values : (npts, nloc)
    grads : (npts, nloc, 2)
        Gradients with respect to the reference coordinates.
    """
    if kind not in N_LOCAL:
        raise ValueError(f"unknown element kind {kind!r}")
    bary = np.atleast_2d(_check_bary(bary))
    lam = bary
    if kind == "P1":
        vals = lam.copy()
        grads = np.broadcast_to(_DLAMBDA, (len(lam), 3, 2)).copy()
        return vals, grads

    npts = len(lam)
    vals = np.empty((npts, 6))
    grads = np.empty((npts, 6, 2))
    for i in range(3):
        vals[:, i] = lam[:, i] * (2 * lam[:, i] - 1)
        grads[:, i] = (4 * lam[:, i] - 1)[:, None] * _DLAMBDA[i]
    for k, (i, j) in enumerate(_EDGE):
        vals[:, 3 + k] = 4 * lam[:, i] * lam[:, j]
        grads[:, 3 + k] = 4 * (lam[:, j, None] * _DLAMBDA[i] + lam[:, i, None] * _DLAMBDA[j])
    return vals, grads


def reference_nodes(kind: str) -> np.ndarray:
    """Barycentric coordinates of the local nodes."""
    nodes = np.eye(3)
    if kind == "P1":
        return nodes
    mids = np.array([(nodes[i] + nodes[j]) / 2 for i, j in _EDGE])
    return np.vstack([nodes, mids])
