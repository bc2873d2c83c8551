import numpy as np
import pytest

from tpsfem.mesh import TriMesh, build_square_mesh


def make_two_triangle_square():
    """Unit square split along the diagonal; the diagonal is the base edge."""
    pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    tris = [(0, 2, 1), (2, 0, 3)]   # ccw, newest last, base edge = (0, 2)
    return TriMesh.from_arrays(pts, tris, newest=[2, 2])


def make_unit_right_triangle():
    pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    return TriMesh.from_arrays(pts, [(0, 1, 2)], newest=[2])


def make_interface_strip(k):
    """Strip of 2k right triangles whose base edges form a blocking chain.

    Bisecting the base edge of the first triangle forces recursion through
    all 2k-1 downstream triangles before the first split can happen.
    """
    pts = []
    for i in range(k + 1):
        pts.append((float(i), 0.0))   # u_i -> id 2i
        pts.append((float(i), 1.0))   # v_i -> id 2i+1
    u = lambda i: 2 * i
    v = lambda i: 2 * i + 1
    tris, newest = [], []
    for i in range(k):
        # upper triangle (u_i, v_{i+1}, v_i): newest v_i, base = diagonal
        tris.append((u(i), v(i + 1), v(i)))
        newest.append(2)
        # lower triangle (u_{i+1}, v_{i+1}, u_i): newest u_i, base = vertical
        tris.append((u(i + 1), v(i + 1), u(i)))
        newest.append(2)
    return TriMesh.from_arrays(pts, tris, newest)


def make_fan_mesh(interior_xy=(0.5, 0.5)):
    """Five boundary nodes with one interior node fanned by five triangles."""
    pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.0), interior_xy]
    tris = [(0, 4, 5), (4, 1, 5), (1, 2, 5), (2, 3, 5), (3, 0, 5)]
    return TriMesh.from_arrays(pts, tris, newest=[2] * 5)


@pytest.fixture
def square_mesh():
    return build_square_mesh(0)


def total_area(mesh):
    return sum(mesh.tri_area(t) for t in mesh.tris)


def all_angles(mesh):
    out = []
    for t in mesh.tris:
        out.extend(mesh.tri_angles(t))
    return np.asarray(out)
