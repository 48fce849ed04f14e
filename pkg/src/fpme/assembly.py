"""P1 operators on a triangulation: stiffness, lumped and consistent mass,
nodal interpolation, and mass-lumped integrals of nodal functions.

All integrands are element-wise polynomial, so every matrix entry is
assembled from the closed-form integral; there is no quadrature error.
Element loops are vectorized with a fixed reduction order, which makes
assembly bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, locate_points


@dataclass(frozen=True)
class NodalField:
    """Coefficients of a continuous piecewise affine function (one value per vertex)."""

    values: np.ndarray
    mesh: Mesh

    def __post_init__(self):
        values = np.array(self.values, dtype=float)  # defensive copy
        if values.shape != (self.mesh.num_vertices,):
            raise ValueError(
                f"field length {values.shape} does not match mesh with "
                f"{self.mesh.num_vertices} vertices")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite nodal values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def element_basis_gradients(mesh):
    """Constant gradients of the three local P1 basis functions, shape (M, 3, 2).

    grad lambda_0 = -(g1 + g2) where (g1, g2) are the rows of B^{-T}.
    """
    invBT = np.linalg.inv(np.swapaxes(mesh.B, 1, 2))  # (M, 2, 2)
    g = np.empty((mesh.num_triangles, 3, 2))
    g[:, 1] = invBT[:, :, 0]
    g[:, 2] = invBT[:, :, 1]
    g[:, 0] = -g[:, 1] - g[:, 2]
    return g


def assemble_stiffness(mesh):
    """Sparse symmetric PSD matrix of the Dirichlet form int grad u . grad v."""
    if np.any(mesh.areas <= 0):
        raise ValueError("degenerate element encountered in stiffness assembly")
    grads = element_basis_gradients(mesh)
    # local K_ab = area * grad_a . grad_b
    local = np.einsum("m,mad,mbd->mab", mesh.areas, grads, grads)
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.num_vertices
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


def assemble_lumped_mass(mesh):
    """Diagonal of the vertex-quadrature mass matrix: entry i = int phi_i = sum(areas)/3."""
    diag = np.zeros(mesh.num_vertices)
    np.add.at(diag, mesh.triangles.ravel(),
              np.repeat(mesh.areas / 3.0, 3))
    if np.any(diag <= 0):
        raise ValueError("nonpositive lumped mass entry")
    return diag


def assemble_consistent_mass(mesh):
    """Sparse symmetric positive definite matrix of int phi_i phi_j."""
    tri = mesh.triangles
    base = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    local = mesh.areas[:, None, None] * base[None, :, :]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.num_vertices
    M = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M.sum_duplicates()
    return M


def interpolate(f, mesh):
    """Nodal interpolant: values[i] = f(P_i).

    ``f`` is called as ``f(x, y)`` on coordinate arrays; a scalar result
    is broadcast.  Non-finite values raise with the offending vertex id.
    """
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    vals = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape).copy()
    bad = np.nonzero(~np.isfinite(vals))[0]
    if bad.size:
        raise ValueError(f"interpolated value not finite at vertex {bad[0]}")
    return NodalField(vals, mesh)


def element_gradients(field):
    """Per-element constant gradients of a P1 field, shape (M, 2)."""
    v = field.values[field.mesh.triangles]  # (M, 3)
    d = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)  # (M, 2)
    invBT = np.linalg.inv(np.swapaxes(field.mesh.B, 1, 2))
    return np.einsum("mij,mj->mi", invBT, d)


def element_gradient(field, elem):
    """Constant gradient of the P1 field on one element."""
    mesh = field.mesh
    elem = int(elem)
    v = field.values[mesh.triangles[elem]]
    d = np.array([v[1] - v[0], v[2] - v[0]])
    return np.linalg.solve(mesh.B[elem].T, d)


def integrate_pi_h(g, field, lumped=None):
    """Exact integral of the nodal interpolant of g(field): sum_i M_i g(v_i)."""
    if lumped is None:
        lumped = assemble_lumped_mass(field.mesh)
    gv = np.asarray(g(field.values), dtype=float)
    if not np.all(np.isfinite(gv)):
        raise ValueError("g produced non-finite values")
    return float(lumped @ gv)


def lumped_mean(values, lumped, domain_area):
    """Exact mean of a P1 field: (sum_i M_i v_i) / |Omega|."""
    return float(lumped @ values) / domain_area


def evaluate(field, points):
    """Evaluate a P1 field at arbitrary points of a structured mesh (exact)."""
    mesh = field.mesh
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    elems = locate_points(mesh, pts)
    p0 = mesh.vertices[mesh.triangles[elems, 0]]
    d = pts - p0
    # reference coordinates: solve B xi = (x - p0) elementwise
    B = mesh.B[elems]
    det = mesh.det_B[elems]
    xi = (B[:, 1, 1] * d[:, 0] - B[:, 0, 1] * d[:, 1]) / det
    eta = (-B[:, 1, 0] * d[:, 0] + B[:, 0, 0] * d[:, 1]) / det
    v = field.values[mesh.triangles[elems]]
    return v[:, 0] * (1.0 - xi - eta) + v[:, 1] * xi + v[:, 2] * eta


def export_matrix_coo(matrix, path):
    """Debug dump of a sparse matrix in coordinate text format (row col value)."""
    coo = sp.coo_matrix(matrix)
    with open(path, "w") as f:
        f.write(f"# rows={coo.shape[0]} cols={coo.shape[1]} nnz={coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            f.write(f"{r} {c} {float(v)!r}\n")
    return path
