"""Finite element assembly over piecewise linear triangular elements.

All element integrals are evaluated in closed form: on a triangle of area T
the basis gradients are constant and ``integral(b_p) = T / 3``, so the
stiffness, gradient and data-projection matrices are exact.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import DegenerateTriangle, NoDataInDomain, OutsideTriangle

AREA_TOL = 1e-14


def _tri_geometry(mesh):
    """Vertex ids, signed areas and gradient coefficients for all triangles.

    Returns (tri_ids, verts (m,3), area (m,), gx (m,3), gy (m,3)) where
    (gx, gy) are the constant gradients of the three local basis functions.
    """
    ids = np.fromiter(mesh.tris.keys(), dtype=np.int64)
    verts = np.array([mesh.tris[t] for t in ids], dtype=np.int64)
    pts = mesh.points
    x = pts[:, 0][verts]
    y = pts[:, 1][verts]
    # b_i = y_j - y_k, c_i = x_k - x_j  (cyclic), grad b_i = (b_i, c_i) / (2T)
    bcoef = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    ccoef = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (y[:, 1] - y[:, 0]) * (x[:, 2] - x[:, 0]))
    if np.any(area < AREA_TOL):
        bad = ids[area < AREA_TOL]
        raise DegenerateTriangle(f"triangles {bad[:5].tolist()} have area < {AREA_TOL}")
    gx = bcoef / (2.0 * area[:, None])
    gy = ccoef / (2.0 * area[:, None])
    return ids, verts, area, gx, gy


def basis_eval(mesh, tri_id, p):
    """Barycentric basis values and gradients of triangle ``tri_id`` at ``p``.

    Returns
    -------
    (values, grads)
        ``values`` is the length-3 array of basis values (summing to 1) and
        ``grads`` the 2x3 table of constant basis gradients.
    """
    bary = mesh.tri_bary(tri_id, p)
    if bary.min() < -1e-12:
        raise OutsideTriangle(f"point {p} outside triangle {tri_id}")
    pts = mesh.points[list(mesh.tris[tri_id])]
    x, y = pts[:, 0], pts[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area = 0.5 * ((x[1] - x[0]) * (y[2] - y[0]) - (y[1] - y[0]) * (x[2] - x[0]))
    grads = np.vstack([b, c]) / (2.0 * area)
    return bary, grads


def assemble_L(mesh):
    """Stiffness matrix L_pq = integral of grad(b_p) . grad(b_q)."""
    _, verts, area, gx, gy = _tri_geometry(mesh)
    n = mesh.n_nodes
    # element matrix: T * (gx gx^T + gy gy^T)
    elem = area[:, None, None] * (gx[:, :, None] * gx[:, None, :]
                                  + gy[:, :, None] * gy[:, None, :])
    rows = np.repeat(verts, 3, axis=1).ravel()
    cols = np.tile(verts, (1, 3)).ravel()
    L = sp.coo_matrix((elem.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    L.sum_duplicates()
    return L


def assemble_G(mesh, j):
    """Gradient matrix (G_j)_pq = integral of b_p * d(b_q)/dx_j."""
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    _, verts, area, gx, gy = _tri_geometry(mesh)
    n = mesh.n_nodes
    g = gx if j == 1 else gy
    # integral(b_p) = T/3, d_j b_q constant: element entry (p, q) = T/3 * g_q
    elem = (area[:, None] / 3.0)[:, :, None] * np.ones((1, 3, 1)) * g[:, None, :]
    rows = np.repeat(verts, 3, axis=1).ravel()
    cols = np.tile(verts, (1, 3)).ravel()
    G = sp.coo_matrix((elem.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    G.sum_duplicates()
    return G


@dataclass
class Located:
    """Data points resolved to mesh triangles.

    Attributes
    ----------
    indices : (k,) ndarray
        Indices into the data arrays of the points found inside the mesh.
    tri_ids : (k,) ndarray
    tri_nodes : (k, 3) ndarray
    bary : (k, 3) ndarray
    n_dropped : int
        Number of points outside the mesh (excluded from fits and metrics).
    """
    indices: np.ndarray
    tri_ids: np.ndarray
    tri_nodes: np.ndarray
    bary: np.ndarray
    n_dropped: int

    @property
    def n_used(self):
        return len(self.indices)

    def points_by_tri(self):
        """Map triangle id -> list of located data indices (positions in arrays)."""
        out = {}
        for pos, t in enumerate(self.tri_ids):
            out.setdefault(int(t), []).append(pos)
        return out


def locate_dataset(mesh, data):
    """Locate every data point; points outside the mesh are dropped."""
    idx, tids, nodes, bary = [], [], [], []
    for i, p in enumerate(np.asarray(data.x, dtype=float)):
        t = mesh.locate(p)
        if t is None:
            continue
        idx.append(i)
        tids.append(t)
        nodes.append(mesh.tris[t])
        bary.append(mesh.tri_bary(t, p))
    dropped = len(data) - len(idx)
    if not idx:
        return Located(np.empty(0, dtype=int), np.empty(0, dtype=int),
                       np.empty((0, 3), dtype=int), np.empty((0, 3)), dropped)
    return Located(np.asarray(idx), np.asarray(tids),
                   np.asarray(nodes), np.asarray(bary), dropped)


def assemble_A_d(mesh, data, located=None):
    """Data projection matrix A = (1/n) sum b b^T and vector d = (1/n) sum b y.

    ``n`` counts the points actually located in the mesh; points outside are
    dropped (their count is reported on the Located record).
    """
    if located is None:
        located = locate_dataset(mesh, data)
    k = located.n_used
    if k == 0:
        raise NoDataInDomain("no data point lies inside the mesh")
    n_nodes = mesh.n_nodes
    y = np.asarray(data.y, dtype=float)[located.indices]
    outer = located.bary[:, :, None] * located.bary[:, None, :] / k
    rows = np.repeat(located.tri_nodes, 3, axis=1).ravel()
    cols = np.tile(located.tri_nodes, (1, 3)).ravel()
    A = sp.coo_matrix((outer.ravel(), (rows, cols)),
                      shape=(n_nodes, n_nodes)).tocsr()
    A.sum_duplicates()
    d = np.zeros(n_nodes)
    np.add.at(d, located.tri_nodes.ravel(),
              (located.bary * y[:, None] / k).ravel())
    return A, d


@dataclass
class FemSystem:
    """Assembled matrices of the smoothing problem on one mesh.

    ``bv`` holds the Dirichlet boundary values used when the saddle system is
    built (their eliminated contributions become the right-hand side).
    """
    mesh: object
    A: sp.csr_matrix
    d: np.ndarray
    L: sp.csr_matrix
    G1: sp.csr_matrix
    G2: sp.csr_matrix
    located: Located
    bv: object = None

    @classmethod
    def build(cls, mesh, data, bv=None):
        located = locate_dataset(mesh, data)
        A, d = assemble_A_d(mesh, data, located)
        return cls(mesh=mesh, A=A, d=d, L=assemble_L(mesh),
                   G1=assemble_G(mesh, 1), G2=assemble_G(mesh, 2),
                   located=located, bv=bv)
