"""Dense reference assembly by straightforward loops.

Nothing here uses the vectorized assembler, the reference-element basis or
the DOF maps of :mod:`vdns.fem`. Shape functions are built on each physical
triangle by inverting a monomial Vandermonde matrix, and every integral is a
plain loop over elements, quadrature points and basis pairs. Only the mesh
and the quadrature table are shared with the production path, so comparing
the two checks the assembly, not the data.

Meant for tiny meshes (a few dozen triangles).
"""
from __future__ import annotations

import numpy as np


def _monomials(x, y, degree):
    if degree == 1:
        return np.array([1.0, x, y]), np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    vals = np.array([1.0, x, y, x * x, x * y, y * y])
    grads = np.array([[0, 0], [1, 0], [0, 1], [2 * x, 0], [y, x], [0, 2 * y]], dtype=float)
    return vals, grads


class _Element:
    """Lagrange basis on one physical triangle."""

    def __init__(self, nodes, degree):
        self.degree = degree
        vander = np.array([_monomials(x, y, degree)[0] for x, y in nodes])
        self.coef = np.linalg.inv(vander)  # column i -> basis function i

    def __call__(self, x, y):
        m, dm = _monomials(x, y, self.degree)
        return m @ self.coef, (dm.T @ self.coef).T  # (n,), (n, 2)


class BruteForceAssembler:
    """Dense density and momentum systems on a small mesh."""

    def __init__(self, mesh, rule):
        self.mesh = mesh
        self.rule = rule
        nv = mesh.n_vertices
        edge_id = {tuple(sorted(map(int, e))): k for k, e in enumerate(mesh.edges)}
        self.n_p1 = nv
        self.n_p2 = nv + len(mesh.edges)
        self.elements = []
        for tri in mesh.triangles:
            pts = mesh.vertices[tri]
            a, b, c = (int(v) for v in tri)
            # midpoint nodes in the order opposite vertex a, b, c
            pairs = [(b, c), (c, a), (a, b)]
            p2_dofs = [a, b, c] + [nv + edge_id[tuple(sorted(pr))] for pr in pairs]
            p2_nodes = list(pts) + [(mesh.vertices[i] + mesh.vertices[j]) / 2 for i, j in pairs]
            area = 0.5 * abs((pts[1, 0] - pts[0, 0]) * (pts[2, 1] - pts[0, 1])
                             - (pts[1, 1] - pts[0, 1]) * (pts[2, 0] - pts[0, 0]))
            qpts = [tuple(lam @ pts) for lam in rule.points]
            self.elements.append(dict(
                p1=_Element(pts, 1), p2=_Element(p2_nodes, 2), p1_dofs=[a, b, c],
                p2_dofs=p2_dofs, qpts=qpts, qw=[w * area for w in rule.weights]))

    # field evaluation

    def _scalar(self, el, coeffs, x, y, kind="p2"):
        phi, dphi = el[kind](x, y)
        dofs = el[f"{kind}_dofs"]
        c = np.asarray(coeffs)[dofs]
        return float(phi @ c), dphi.T @ c

    def _vector(self, el, coeffs, x, y):
        n = self.n_p2
        v0, g0 = self._scalar(el, coeffs[:n], x, y)
        v1, g1 = self._scalar(el, coeffs[n:], x, y)
        return np.array([v0, v1]), np.array([g0, g1])

    # systems

    def density_system(self, alpha, hist_sigma, advecting, source=None, form="divergence"):
        """Matrix and rhs of ``alpha (s, phi) + conv(b; s, phi) = (hist, phi) + (g, phi)``.

        ``hist_sigma`` holds P2 coefficients of the history combination;
        ``source(x, y)`` is an optional scalar function.
        """
        n = self.n_p2
        mat = np.zeros((n, n))
        rhs = np.zeros(n)
        for el in self.elements:
            dofs = el["p2_dofs"]
            for (x, y), w in zip(el["qpts"], el["qw"]):
                phi, dphi = el["p2"](x, y)
                b, gb = self._vector(el, advecting, x, y)
                div_b = gb[0, 0] + gb[1, 1]
                h, _ = self._scalar(el, hist_sigma, x, y)
                g = source(x, y) if source is not None else 0.0
                for i in range(6):
                    rhs[dofs[i]] += w * (h + g) * phi[i]
                    for j in range(6):
                        adv_j = b @ dphi[j]
                        if form == "divergence":
                            conv = adv_j * phi[i] + 0.5 * div_b * phi[j] * phi[i]
                        else:
                            conv = 0.5 * adv_j * phi[i] - 0.5 * (b @ dphi[i]) * phi[j]
                        mat[dofs[i], dofs[j]] += w * (alpha * phi[j] * phi[i] + conv)
        return mat, rhs

    def momentum_system(self, alpha, mu, sigma_next, advecting, hist_terms, source=None):
        """Full saddle matrix ``[[A, B^T, 0], [B, 0, m], [0, m^T, 0]]`` and rhs.

        ``hist_terms`` is a list of ``(weight, sigma_coeffs, u_coeffs)``; the
        momentum history is ``sigma_next * sum(weight * sigma * u)``.
        """
        n2, n1 = self.n_p2, self.n_p1
        nu = 2 * n2
        size = nu + n1 + 1
        mat = np.zeros((size, size))
        rhs = np.zeros(size)
        for el in self.elements:
            d2 = el["p2_dofs"]
            d1 = el["p1_dofs"]
            for (x, y), w in zip(el["qpts"], el["qw"]):
                phi, dphi = el["p2"](x, y)
                psi, _ = el["p1"](x, y)
                s1, _ = self._scalar(el, sigma_next, x, y)
                rho = s1 * s1
                b, _ = self._vector(el, advecting, x, y)
                hist = np.zeros(2)
                for weight, sig, vel in hist_terms:
                    sv, _ = self._scalar(el, sig, x, y)
                    uv, _ = self._vector(el, vel, x, y)
                    hist += weight * sv * uv
                hist *= s1
                f = source(x, y) if source is not None else np.zeros(2)
                for c in range(2):
                    off = c * n2
                    for i in range(6):
                        rhs[off + d2[i]] += w * (hist[c] + f[c]) * phi[i]
                        for j in range(6):
                            val = (alpha * rho * phi[j] * phi[i]
                                   + 0.5 * rho * (b @ dphi[j]) * phi[i]
                                   - 0.5 * rho * (b @ dphi[i]) * phi[j]
                                   + mu * (dphi[j] @ dphi[i]))
                            mat[off + d2[i], off + d2[j]] += w * val
                        for k in range(3):
                            # pressure row k, velocity column (c, i): -(psi_k, d_c phi_i)
                            bki = -w * psi[k] * dphi[i][c]
                            mat[nu + d1[k], off + d2[i]] += bki
                            mat[off + d2[i], nu + d1[k]] += bki
                for k in range(3):
                    mat[nu + d1[k], size - 1] += w * psi[k]
                    mat[size - 1, nu + d1[k]] += w * psi[k]
        return mat, rhs


def relative_mismatch(a, b) -> float:
    """``max|a - b| / max|b|`` for dense or sparse inputs."""
    a = a.toarray() if hasattr(a, "toarray") else np.asarray(a)
    b = b.toarray() if hasattr(b, "toarray") else np.asarray(b)
    scale = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else float(np.max(np.abs(a)))
