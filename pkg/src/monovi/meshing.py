"""Structured P1 meshes, boundary masks, lumped masses and nodal fields.

1D meshes are uniform subdivisions of an interval; 2D meshes are uniform
rectangles with each cell split into two triangles.  Nodal fields are plain
float arrays indexed by node; element quantities (measures, hat-function
gradients, midpoints) are precomputed at construction so assembly loops are
pure array expressions.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Mesh", "build_mesh", "interval_mesh", "rectangle_mesh",
           "gradient", "gradients", "positive_part", "nodal_min", "nodal_max",
           "nodal_leq", "is_dirichlet"]


class MeshError(ValueError):
    pass


class Mesh:
    """Immutable simplicial mesh with precomputed P1 data.

    Attributes
    ----------
    dim : int
    coords : (n_nodes, dim) array
    elements : (n_elem, dim+1) int array
    boundary : (n_nodes,) bool mask
    interior : int array of non-boundary node indices
    measures : (n_elem,) element lengths/areas
    grads : (n_elem, dim+1, dim) gradients of the local hat functions
    centers : (n_elem, dim) element midpoints/centroids
    lumped_mass : (n_nodes,) integral of each hat function
    """

    __slots__ = ("dim", "coords", "elements", "boundary", "interior",
                 "measures", "grads", "centers", "lumped_mass", "shape_info")

    def __init__(self, dim, coords, elements, boundary, shape_info=None):
        self.dim = int(dim)
        self.coords = np.asarray(coords, dtype=float)
        self.elements = np.asarray(elements, dtype=np.int64)
        self.boundary = np.asarray(boundary, dtype=bool)
        self.shape_info = shape_info or {}
        if self.elements.shape[1] != self.dim + 1:
            raise MeshError("connectivity width must be dim + 1")
        for row in self.elements:
            if len(set(row.tolist())) != self.dim + 1:
                raise MeshError("element nodes must be distinct")
        self.interior = np.flatnonzero(~self.boundary)
        self._build_p1()

    def _build_p1(self):
        pts = self.coords[self.elements]          # (ne, d+1, d)
        ne = self.elements.shape[0]
        if self.dim == 1:
            h = pts[:, 1, 0] - pts[:, 0, 0]
            if np.any(h <= 0):
                raise MeshError("element measures must be positive")
            self.measures = h
            g = np.empty((ne, 2, 1))
            g[:, 0, 0] = -1.0 / h
            g[:, 1, 0] = 1.0 / h
            self.grads = g
            self.centers = 0.5 * (pts[:, 0, :] + pts[:, 1, :])
        else:
            e1 = pts[:, 1, :] - pts[:, 0, :]
            e2 = pts[:, 2, :] - pts[:, 0, :]
            det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            if np.any(det <= 0):
                raise MeshError("triangles must be positively oriented with positive area")
            self.measures = 0.5 * det
            inv = np.empty((ne, 2, 2))
            inv[:, 0, 0] = e2[:, 1] / det
            inv[:, 0, 1] = -e2[:, 0] / det
            inv[:, 1, 0] = -e1[:, 1] / det
            inv[:, 1, 1] = e1[:, 0] / det
            g = np.empty((ne, 3, 2))
            g[:, 1, :] = inv[:, 0, :]
            g[:, 2, :] = inv[:, 1, :]
            g[:, 0, :] = -g[:, 1, :] - g[:, 2, :]
            self.grads = g
            self.centers = pts.mean(axis=1)
        mass = np.zeros(self.coords.shape[0])
        np.add.at(mass, self.elements,
                  (self.measures / (self.dim + 1.0))[:, None])
        self.lumped_mass = mass
        for a in (self.measures, self.grads, self.centers, self.lumped_mass):
            a.flags.writeable = False

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def zeros(self):
        return np.zeros(self.n_nodes)


def interval_mesh(x0, x1, n):
    """Uniform mesh of [x0, x1] with n cells (n >= 2)."""
    if n < 2:
        raise MeshError(f"need at least 2 cells in 1D, got {n}")
    if not x1 > x0:
        raise MeshError("interval extent must be positive")
    xs = np.linspace(x0, x1, n + 1)
    elements = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[0] = boundary[-1] = True
    return Mesh(1, xs[:, None], elements, boundary,
                shape_info={"kind": "interval", "n": int(n)})


def rectangle_mesh(x0, x1, y0, y1, nx, ny):
    """nx-by-ny rectangle, each cell split into two triangles (nx, ny >= 2)."""
    if nx < 2 or ny < 2:
        raise MeshError(f"need at least 2 cells per direction in 2D, got {nx}x{ny}")
    if not (x1 > x0 and y1 > y0):
        raise MeshError("rectangle extents must be positive")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    coords = np.stack([X.ravel(), Y.ravel()], axis=1)

    def node(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            ll, lr = node(i, j), node(i + 1, j)
            ul, ur = node(i, j + 1), node(i + 1, j + 1)
            tris.append((ll, lr, ur))
            tris.append((ll, ur, ul))
    boundary = np.zeros((ny + 1) * (nx + 1), dtype=bool)
    for j in range(ny + 1):
        for i in range(nx + 1):
            if i in (0, nx) or j in (0, ny):
                boundary[node(i, j)] = True
    return Mesh(2, coords, np.asarray(tris), boundary,
                shape_info={"kind": "rectangle", "nx": int(nx), "ny": int(ny)})


def build_mesh(config):
    """Construct a mesh from a config mapping (see the run-file schema)."""
    dim = int(config.get("dimension", 1))
    if dim == 1:
        return interval_mesh(config.get("x0", 0.0), config.get("x1", 1.0),
                             int(config["n"]))
    if dim == 2:
        return rectangle_mesh(config.get("x0", 0.0), config.get("x1", 1.0),
                              config.get("y0", 0.0), config.get("y1", 1.0),
                              int(config["nx"]), int(config["ny"]))
    raise MeshError(f"unsupported dimension {dim}")


def gradients(mesh: Mesh, u):
    """Per-element P1 gradients of a nodal field, shape (n_elem, dim)."""
    u = np.asarray(u, dtype=float)
    return np.einsum("eld,el->ed", mesh.grads, u[mesh.elements])


def gradient(mesh: Mesh, u, element):
    """Exact P1 gradient of u on one element."""
    e = int(element)
    if not 0 <= e < mesh.n_elements:
        raise IndexError(f"element {e} out of range")
    return mesh.grads[e].T @ np.asarray(u, dtype=float)[mesh.elements[e]]


def positive_part(u):
    return np.maximum(np.asarray(u, dtype=float), 0.0)


def nodal_min(u, w):
    return np.minimum(u, w)


def nodal_max(u, w):
    return np.maximum(u, w)


def nodal_leq(u, w, tol=0.0):
    """True iff u <= w + tol at every node."""
    return bool(np.all(np.asarray(u) <= np.asarray(w) + tol))


def is_dirichlet(mesh: Mesh, u, tol=0.0):
    """True iff u vanishes (within tol) on the boundary mask."""
    return bool(np.all(np.abs(np.asarray(u)[mesh.boundary]) <= tol))
