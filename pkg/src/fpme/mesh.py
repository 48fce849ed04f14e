"""Structured triangulations of axis-aligned rectangles.

Only meshes built from right-triangle patterns are generated: they are
conforming, quasi-uniform and nonobtuse by construction, which is the
weak-acuteness hypothesis the discrete maximum principles rest on.
The first vertex of every triangle is the right-angle vertex; it plays
the distinguished role in the per-element chain-rule matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Angle slack (radians) accepted beyond a right angle.
ACUTE_TOL = 1e-12

PATTERNS = ("right-diagonal", "crisscross")


@dataclass(frozen=True)
class AffineMap:
    """Affine map ``x_hat -> p0 + B @ x_hat`` from the reference simplex."""

    B: np.ndarray
    p0: np.ndarray


@dataclass(frozen=True)
class AcutenessReport:
    ok: bool
    worst_angle: float
    offending_elems: list


class Mesh:
    """Immutable conforming triangulation of a rectangle.

    Parameters
    ----------
    vertices : (N, 2) float array of vertex coordinates.
    triangles : (M, 3) int array; each row lists vertex indices in
        counterclockwise order, first index being the element's P0.
    domain_bounds : (xmin, xmax, ymin, ymax).
    structure : optional (nx, ny, pattern) tuple recorded for structured
        meshes; enables exact point location.
    """

    def __init__(self, vertices, triangles, domain_bounds, structure=None):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError("vertices must be an (N, 2) array")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError("triangles must be an (M, 3) array")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("non-finite vertex coordinates")
        if triangles.min(initial=0) < 0 or triangles.max(initial=-1) >= len(vertices):
            raise ValueError("triangle vertex index out of range")
        self.vertices = vertices
        self.triangles = triangles
        self.domain_bounds = tuple(float(b) for b in domain_bounds)
        self.structure = structure
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)

        p = vertices[triangles]  # (M, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(det <= 0):
            bad = np.nonzero(det <= 0)[0]
            raise ValueError(f"non-positively-oriented or degenerate elements: {bad.tolist()}")
        # Element affine maps: B columns are the edge vectors from P0.
        self.B = np.stack([e1, e2], axis=-1)  # (M, 2, 2)
        self.det_B = det
        self.areas = 0.5 * det
        edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        lengths = np.linalg.norm(edges, axis=2)  # (M, 3)
        self.diameters = lengths.max(axis=1)
        self.inradii = 2.0 * self.areas / lengths.sum(axis=1)
        self.h = float(self.diameters.max())
        for arr in (self.B, self.det_B, self.areas, self.diameters, self.inradii):
            arr.setflags(write=False)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def domain_area(self):
        xmin, xmax, ymin, ymax = self.domain_bounds
        return (xmax - xmin) * (ymax - ymin)

    def quasi_uniformity_ratio(self):
        """max element diameter / min element inradius (reported, not enforced)."""
        return float(self.diameters.max() / self.inradii.min())


def build_structured_rect_mesh(bounds, nx, ny, pattern="right-diagonal"):
    """Triangulate the rectangle ``bounds = (xmin, xmax, ymin, ymax)``.

    ``right-diagonal`` splits each of the ``nx * ny`` cells along the
    SW-NE diagonal into two right triangles; ``crisscross`` splits each
    cell into four triangles meeting at the cell center.  In both
    patterns the designated P0 of every triangle is its right-angle
    vertex (exactly right for square cells, crisscross center apex).
    """
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate or inverted bounds")

    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    grid_vertices = np.column_stack([xg.ravel(), yg.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    if pattern == "right-diagonal":
        vertices = grid_vertices
        for i in range(nx):
            for j in range(ny):
                n00, n10 = nid(i, j), nid(i + 1, j)
                n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
                tris.append((n10, n11, n00))  # right angle at SE corner
                tris.append((n01, n00, n11))  # right angle at NW corner
    else:  # crisscross: one extra vertex per cell center
        centers = np.empty((nx * ny, 2))
        base = (nx + 1) * (ny + 1)
        for i in range(nx):
            for j in range(ny):
                c = base + i * ny + j
                centers[i * ny + j] = (0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
                n00, n10 = nid(i, j), nid(i + 1, j)
                n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
                tris.append((c, n00, n10))
                tris.append((c, n10, n11))
                tris.append((c, n11, n01))
                tris.append((c, n01, n00))
        vertices = np.vstack([grid_vertices, centers])

    return Mesh(vertices, np.array(tris), (xmin, xmax, ymin, ymax),
                structure=(nx, ny, pattern))


def affine_map(mesh, elem):
    """Affine map of element ``elem``: reference vertices (0, e1, e2) -> (P0, P1, P2)."""
    elem = int(elem)
    if not 0 <= elem < mesh.num_triangles:
        raise IndexError(f"element index {elem} out of range")
    p0 = mesh.vertices[mesh.triangles[elem, 0]]
    return AffineMap(B=mesh.B[elem].copy(), p0=p0.copy())


def element_angles(mesh):
    """All interior angles, shape (M, 3), via the law of cosines."""
    p = mesh.vertices[mesh.triangles]
    angles = np.empty((mesh.num_triangles, 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.einsum("ij,ij->i", a, b) / (
            np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return angles


def check_weakly_acute(mesh, tol=ACUTE_TOL):
    """Report whether every element angle is at most pi/2 + tol."""
    worst_per_elem = element_angles(mesh).max(axis=1)
    bad = np.nonzero(worst_per_elem > np.pi / 2 + tol)[0]
    return AcutenessReport(ok=bad.size == 0,
                           worst_angle=float(worst_per_elem.max()),
                           offending_elems=bad.tolist())


def interior_edge_counts(mesh):
    """Map from sorted edge tuple to number of incident triangles."""
    counts = {}
    for tri in mesh.triangles:
        for k in range(3):
            e = (int(min(tri[k], tri[(k + 1) % 3])), int(max(tri[k], tri[(k + 1) % 3])))
            counts[e] = counts.get(e, 0) + 1
    return counts


def locate_points(mesh, points):
    """Element index containing each query point (structured meshes only).

    Points are clamped to the closed domain; on inter-element boundaries
    any incident element may be returned.  Exact for both generated
    patterns, so P1 evaluation through this lookup is exact.
    """
    if mesh.structure is None:
        raise ValueError("point location requires a structured mesh")
    nx, ny, pattern = mesh.structure
    xmin, xmax, ymin, ymax = mesh.domain_bounds
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    xi = (pts[:, 0] - xmin) / hx
    eta = (pts[:, 1] - ymin) / hy
    i = np.clip(np.floor(xi).astype(int), 0, nx - 1)
    j = np.clip(np.floor(eta).astype(int), 0, ny - 1)
    u = xi - i  # local cell coordinates in [0, 1]
    v = eta - j
    cell = i * ny + j
    if pattern == "right-diagonal":
        lower = u >= v  # SE triangle lies under the SW-NE diagonal
        return 2 * cell + np.where(lower, 0, 1)
    # crisscross: quadrant around the center decides among the 4 triangles
    du = u - 0.5
    dv = v - 0.5
    south = dv <= -np.abs(du)
    east = du >= np.abs(dv)
    north = dv >= np.abs(du)
    local = np.where(south, 0, np.where(east, 1, np.where(north, 2, 3)))
    return 4 * cell + local


def export_csv(mesh, directory):
    """Write ``vertices.csv`` (id,x,y) and ``triangles.csv`` (id,v0,v1,v2)."""
    import csv
    import os

    os.makedirs(directory, exist_ok=True)
    vpath = os.path.join(directory, "vertices.csv")
    tpath = os.path.join(directory, "triangles.csv")
    with open(vpath, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "x", "y"])
        for i, (x, y) in enumerate(mesh.vertices):
            w.writerow([i, repr(float(x)), repr(float(y))])
    with open(tpath, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "v0", "v1", "v2"])
        for i, tri in enumerate(mesh.triangles):
            w.writerow([i, int(tri[0]), int(tri[1]), int(tri[2])])
    return vpath, tpath
