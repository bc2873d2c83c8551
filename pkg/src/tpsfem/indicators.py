"""Per-edge and per-element refinement error indicators.

Two indicators drive adaptive refinement:

* recovery: the piecewise constant gradient of the surface is projected onto
  the nodes (lumped-mass L2 projection) and each element's indicator is the
  exact integral of the squared difference between the recovered linear
  gradient field and the element's constant gradient.

* auxiliary: for an edge, a small local smoothing problem is solved on a
  once-uniformly-bisected copy of the surrounding triangle patch, with
  Dirichlet values taken from the current surface on the patch boundary and
  the data points inside the patch; the indicator integrates the squared
  gradient difference between the local and global surfaces over the edge's
  incident triangles.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import FemSystem
from .boundary import BoundaryValues
from .data import DataSet
from .exceptions import EmptyField, SingularSystem
from .solver import build_system


@dataclass
class IndicatorField:
    """Edge-keyed indicator values of one kind ("recovery" or "auxiliary")."""
    values: dict
    kind: str


def _tri_gradient(mesh, c, t):
    """Constant gradient of the piecewise linear surface on triangle ``t``."""
    nodes = list(mesh.tris[t])
    pts = mesh.points[nodes]
    x, y = pts[:, 0], pts[:, 1]
    area2 = (x[1] - x[0]) * (y[2] - y[0]) - (y[1] - y[0]) * (x[2] - x[0])
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    cc = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    vals = c[nodes]
    return np.array([b @ vals, cc @ vals]) / area2


def _recovered_gradient(mesh, c, node):
    """Lumped-mass projection of the surface gradient at one node."""
    num = np.zeros(2)
    den = 0.0
    for t in mesh.node_tris[node]:
        a = mesh.tri_area(t)
        num += (a / 3.0) * _tri_gradient(mesh, c, t)
        den += a / 3.0
    return num / den


def recovery_indicator(s, tri_id):
    """Element indicator from the recovered-gradient difference.

    Pure function of (mesh, c); uses only mesh values, no data access.
    """
    mesh = s.mesh
    g = _tri_gradient(mesh, s.c, tri_id)
    nodes = list(mesh.tris[tri_id])
    d = np.array([_recovered_gradient(mesh, s.c, n) for n in nodes]) - g
    area = mesh.tri_area(tri_id)
    # exact integral of a linear field squared: T/12 * ((sum d)^2 + sum d^2)
    total = 0.0
    for k in range(2):
        dk = d[:, k]
        total += (area / 12.0) * (dk.sum() ** 2 + (dk ** 2).sum())
    return float(np.sqrt(total))


def consistent_mass_recovered_gradients(mesh, c):
    """Consistent-mass L2 projection of the gradient (dense test oracle)."""
    n = mesh.n_nodes
    M = np.zeros((n, n))
    rhs = np.zeros((n, 2))
    for t in mesh.tris:
        nodes = list(mesh.tris[t])
        a = mesh.tri_area(t)
        g = _tri_gradient(mesh, c, t)
        local = (a / 12.0) * (np.ones((3, 3)) + np.eye(3))
        M[np.ix_(nodes, nodes)] += local
        for i in nodes:
            rhs[i] += (a / 3.0) * g
    return np.linalg.solve(M, rhs)


# -- auxiliary problem ---------------------------------------------------------


def _patch_triangles(mesh, edge_id):
    """Incident triangles of the edge plus their edge-neighbours."""
    seed = list(mesh.edge_tris[edge_id])
    patch = set(seed)
    for t in seed:
        for eid in mesh.tri_edge_ids(t):
            patch.update(mesh.edge_tris[eid])
    return patch, seed


def auxiliary_indicator(s, data, edge_id, alpha, located_by_tri=None):
    """Edge indicator from a locally refined auxiliary smoothing problem.

    Parameters
    ----------
    s : Smoother
        Current global surface (supplies Dirichlet traces and gradients).
    data : DataSet
    edge_id : int
    alpha : float
        Smoothing parameter of the local problem (the global one).
    located_by_tri : dict, optional
        Map triangle id -> indices into ``data`` of the points it contains;
        computed on the fly when absent.

    Returns 0 when the patch contains no data point.
    """
    mesh = s.mesh
    patch, seed = _patch_triangles(mesh, edge_id)
    if located_by_tri is None:
        located_by_tri = {}
        for i, p in enumerate(np.asarray(data.x, dtype=float)):
            t = mesh.locate(p)
            if t is not None and t in patch:
                located_by_tri.setdefault(t, []).append(i)
    pt_idx = [i for t in patch for i in located_by_tri.get(t, [])]
    if not pt_idx:
        return 0.0
    local, node_map, tri_map = mesh.copy_submesh(patch)
    # nodal values of the global surface on the patch, all four fields
    inv = {v: k for k, v in node_map.items()}
    vals = {name: np.array([getattr(s, name)[inv[i]]
                            for i in range(local.n_nodes)])
            for name in ("c", "g1", "g2", "w")}
    seed_local = [tri_map[t] for t in seed]
    events = local.uniform_refine()
    for ev in events:  # midpoint values reproduce the piecewise linear trace
        for name in ("c", "g1", "g2", "w"):
            vals[name] = np.append(
                vals[name],
                0.5 * (vals[name][ev.parent_a] + vals[name][ev.parent_b]))
    bnodes = np.asarray(local.boundary_nodes(), dtype=int)
    bv = BoundaryValues(nodes=bnodes, c=vals["c"][bnodes],
                        g1=vals["g1"][bnodes], g2=vals["g2"][bnodes],
                        w=vals["w"][bnodes])
    ldata = DataSet(np.asarray(data.x, dtype=float)[pt_idx],
                    np.asarray(data.y, dtype=float)[pt_idx])
    fem = FemSystem.build(local, ldata, bv=bv)
    try:
        shat = build_system(fem, alpha, bv).solve()
    except SingularSystem:
        # no interior unknowns: the local surface is pinned to the trace of
        # the global one, so the gradient difference vanishes identically
        return 0.0
    # integrate |grad shat - grad s|^2 over the edge's incident triangles
    descendants = []
    for t0 in seed_local:
        stack = [t0]
        while stack:
            t = stack.pop()
            if t in local.tris:
                descendants.append((t0, t))
            else:
                stack.extend(c for c, p in local.tri_parent.items() if p == t)
    total = 0.0
    for t0, t in descendants:
        gs = _tri_gradient(local, vals["c"], t)   # global surface, linear on t
        gh = _tri_gradient(local, shat.c, t)
        total += local.tri_area(t) * float(np.sum((gh - gs) ** 2))
    return float(np.sqrt(total))


# -- field construction and marking ---------------------------------------------


def recovery_field(s):
    """Element indicators mapped to base edges (max over incident triangles)."""
    mesh = s.mesh
    values = {}
    for t in mesh.tris:
        eta = recovery_indicator(s, t)
        eid = mesh.base_edge_of(t)
        values[eid] = max(values.get(eid, 0.0), eta)
    return IndicatorField(values=values, kind="recovery")


def auxiliary_field(s, data, alpha, located_by_tri=None):
    """Auxiliary indicators for every refinable edge."""
    mesh = s.mesh
    if located_by_tri is None:
        located_by_tri = locate_by_tri(mesh, data)
    values = {}
    for eid in mesh.refinable_edges():
        values[eid] = auxiliary_indicator(s, data, eid, alpha, located_by_tri)
    return IndicatorField(values=values, kind="auxiliary")


def locate_by_tri(mesh, data):
    """Map triangle id -> list of data indices located inside it."""
    out = {}
    for i, p in enumerate(np.asarray(data.x, dtype=float)):
        t = mesh.locate(p)
        if t is not None:
            out.setdefault(t, []).append(i)
    return out


def mark(field, fraction_cap=0.5):
    """Maximum marking: edges with eta >= fraction_cap * max(eta)."""
    if not field.values:
        raise EmptyField("indicator field has no entries")
    peak = max(field.values.values())
    thr = fraction_cap * peak
    return {eid for eid, eta in field.values.items() if eta >= thr}
