"""Triangular meshes with newest-node bisection refinement.

The mesh is stored in a node-edge structure: triangles are vertex triples
oriented counter-clockwise with the newest node in the last slot, and every
edge keeps the list of its incident triangles (two in the interior, one on
the boundary).  The edge opposite a triangle's newest node is its base edge;
bisection always splits a triangle from the newest node to the midpoint of
the base edge, so refined meshes built from the unit-square seed only ever
contain isosceles right triangles.
"""

from collections import namedtuple

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import EmptyResult, NotRefinable, ParseError, ZeroInterior

MESH_SCHEMA = "tpsfem-mesh v1"

#: tolerance for barycentric containment tests
BARY_TOL = 1e-12

#: a node created by bisection, with the endpoints of the split edge
NewNode = namedtuple("NewNode", ["node", "parent_a", "parent_b", "boundary"])


class TriMesh:
    """Mutable conforming triangular mesh with newest-node labels.

    Attributes
    ----------
    xs, ys : list of float
        Node coordinates.  Nodes are append-only; ids stay contiguous.
    node_boundary : list of bool
        True for nodes lying on the mesh boundary.
    tris : dict
        Alive triangles, id -> (n0, n1, n2).  Vertices are counter-clockwise
        and n2 is the newest node, so (n0, n1) is the base edge.
    edges : dict
        Alive edges, id -> (a, b) with a < b.
    edge_tris : dict
        Edge id -> list of incident triangle ids (length 1 or 2).
    """

    def __init__(self):
        self.xs = []
        self.ys = []
        self.node_boundary = []
        self.node_parents = []
        self.tris = {}
        self.edges = {}
        self.edge_tris = {}
        self.node_tris = {}
        self.tri_parent = {}
        self._edge_key = {}
        self._next_tri = 0
        self._next_edge = 0
        self._version = 0
        self._locator = None
        self._points_cache = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_arrays(cls, points, triangles, newest):
        """Build a mesh from raw arrays.

        Parameters
        ----------
        points : (n, 2) array_like
            Node coordinates.
        triangles : (m, 3) array_like of int
            Vertex triples (any orientation).
        newest : (m,) array_like of int
            Local index (0..2) of each triangle's newest node.

        Boundary flags are derived from edge incidence.
        """
        mesh = cls()
        pts = np.asarray(points, dtype=float)
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite node coordinates")
        for x, y in pts:
            mesh._add_node(float(x), float(y), boundary=False, parents=None)
        for tri, nw in zip(np.asarray(triangles, dtype=int), np.asarray(newest, dtype=int)):
            order = [tri[(nw + 1) % 3], tri[(nw + 2) % 3], tri[nw]]
            a, b, v = (int(i) for i in order)
            if _signed_area(pts[a], pts[b], pts[v]) < 0:
                a, b = b, a
            mesh._add_tri(a, b, v)
        mesh._recompute_boundary_flags()
        mesh._bump()
        return mesh

    # -- basic queries -------------------------------------------------------

    @property
    def n_nodes(self):
        return len(self.xs)

    @property
    def n_tris(self):
        return len(self.tris)

    @property
    def points(self):
        """Node coordinates as an (n, 2) array (cached per mesh version)."""
        if self._points_cache is None or len(self._points_cache) != self.n_nodes:
            self._points_cache = np.column_stack(
                [np.asarray(self.xs), np.asarray(self.ys)])
        return self._points_cache

    @property
    def version(self):
        return self._version

    def node_xy(self, n):
        return self.xs[n], self.ys[n]

    def edge_id(self, a, b):
        return self._edge_key.get((a, b) if a < b else (b, a))

    def tri_edge_ids(self, t):
        n0, n1, n2 = self.tris[t]
        return (self.edge_id(n0, n1), self.edge_id(n1, n2), self.edge_id(n2, n0))

    def base_edge_of(self, t):
        """Edge id of the edge opposite triangle ``t``'s newest node."""
        n0, n1, _ = self.tris[t]
        return self.edge_id(n0, n1)

    def is_boundary_edge(self, eid):
        return len(self.edge_tris[eid]) == 1

    def is_base_edge(self, eid):
        """True when ``eid`` is the base edge of all its incident triangles."""
        return all(self.base_edge_of(t) == eid for t in self.edge_tris[eid])

    def is_interface_base_edge(self, eid):
        """True when ``eid`` is the base edge of exactly one of two incident triangles."""
        ts = self.edge_tris[eid]
        if len(ts) != 2:
            return False
        flags = [self.base_edge_of(t) == eid for t in ts]
        return flags[0] != flags[1]

    def refinable_edges(self):
        """Ids of edges that are base edges of at least one incident triangle."""
        out = []
        for eid, ts in self.edge_tris.items():
            if any(self.base_edge_of(t) == eid for t in ts):
                out.append(eid)
        return out

    def tri_area(self, t):
        p = self.points
        n0, n1, n2 = self.tris[t]
        return 0.5 * _signed_area(p[n0], p[n1], p[n2])

    def tri_angles(self, t):
        """The three interior angles of triangle ``t`` in degrees."""
        p = self.points[list(self.tris[t])]
        ang = []
        for i in range(3):
            u = p[(i + 1) % 3] - p[i]
            v = p[(i + 2) % 3] - p[i]
            c = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
            ang.append(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
        return ang

    def boundary_nodes(self):
        return [n for n in range(self.n_nodes) if self.node_boundary[n]]

    def interior_nodes(self):
        return [n for n in range(self.n_nodes) if not self.node_boundary[n]]

    def min_edge_length(self):
        p = self.points
        return min(np.hypot(*(p[a] - p[b])) for a, b in self.edges.values())

    # -- internal mutation ----------------------------------------------------

    def _bump(self):
        self._version += 1
        self._locator = None
        self._points_cache = None

    def _add_node(self, x, y, boundary, parents):
        self.xs.append(x)
        self.ys.append(y)
        self.node_boundary.append(boundary)
        self.node_parents.append(parents)
        nid = len(self.xs) - 1
        self.node_tris[nid] = set()
        return nid

    def _get_edge(self, a, b):
        key = (a, b) if a < b else (b, a)
        eid = self._edge_key.get(key)
        if eid is None:
            eid = self._next_edge
            self._next_edge += 1
            self._edge_key[key] = eid
            self.edges[eid] = key
            self.edge_tris[eid] = []
        return eid

    def _add_tri(self, a, b, v, parent=None):
        tid = self._next_tri
        self._next_tri += 1
        self.tris[tid] = (a, b, v)
        if parent is not None:
            self.tri_parent[tid] = parent
        for n in (a, b, v):
            self.node_tris[n].add(tid)
        for u, w in ((a, b), (b, v), (v, a)):
            self.edge_tris[self._get_edge(u, w)].append(tid)
        return tid

    def _remove_tri(self, tid):
        a, b, v = self.tris.pop(tid)
        for n in (a, b, v):
            self.node_tris[n].discard(tid)
        for u, w in ((a, b), (b, v), (v, a)):
            eid = self.edge_id(u, w)
            if eid is not None:
                self.edge_tris[eid].remove(tid)

    def _delete_edge(self, eid):
        a, b = self.edges.pop(eid)
        del self.edge_tris[eid]
        del self._edge_key[(a, b)]

    # -- refinement -------------------------------------------------------

    def bisect(self, edge_id):
        """Bisect a (interface) base edge, recursing through coarser neighbours.

        For a base edge shared by a triangle pair both triangles are split at
        the edge midpoint and the midpoint becomes the newest node of all
        children.  For an interface base edge the coarse neighbour is refined
        first until the edge is the base edge of both sides.

        Returns
        -------
        list of NewNode
            One entry per node created, including those from recursion.

        Raises
        ------
        NotRefinable
            If the edge id is dead/unknown or not a (interface) base edge.
        """
        if edge_id not in self.edges:
            raise NotRefinable(f"edge {edge_id} is not an edge of the mesh")
        if not any(self.base_edge_of(t) == edge_id for t in self.edge_tris[edge_id]):
            raise NotRefinable(f"edge {edge_id} is not a base edge of any triangle")
        created = []
        stack = [edge_id]
        budget = 8 * len(self.tris) + 64
        while stack:
            budget -= 1
            if budget < 0:
                raise NotRefinable("base-edge recursion does not terminate "
                                   "(cyclic newest-node labels)")
            eid = stack[-1]
            if eid not in self.edges:  # consumed by earlier recursion
                stack.pop()
                continue
            blockers = [self.base_edge_of(t) for t in self.edge_tris[eid]
                        if self.base_edge_of(t) != eid]
            if blockers:
                stack.extend(blockers)
                continue
            stack.pop()
            created.append(self._split_base_edge(eid))
        self._bump()
        return created

    def _split_base_edge(self, eid):
        # every incident triangle has eid as its base edge at this point
        a, b = self.edges[eid]
        incident = [(tid, self.tris[tid]) for tid in self.edge_tris[eid]]
        for tid, _ in incident:
            self._remove_tri(tid)
        self._delete_edge(eid)
        boundary = len(incident) == 1
        mid = self._add_node(0.5 * (self.xs[a] + self.xs[b]),
                             0.5 * (self.ys[a] + self.ys[b]),
                             boundary=boundary, parents=(a, b))
        for tid, (p, q, v) in incident:
            # children (p, mid, v) and (mid, q, v), newest node mid
            self._add_tri(v, p, mid, parent=tid)
            self._add_tri(q, v, mid, parent=tid)
        return NewNode(mid, a, b, boundary)

    def uniform_refine(self):
        """Bisect every triangle along its base edge once (one pass).

        Two passes halve the mesh size h.  Returns the list of nodes created.
        """
        created = []
        for tid in sorted(self.tris):
            if tid in self.tris:
                created.extend(self.bisect(self.base_edge_of(tid)))
        return created

    def refine_wave(self, marked_edges):
        """Bisect each marked edge, skipping ids consumed by earlier recursion."""
        created = []
        for eid in sorted(marked_edges):
            if eid in self.edges:
                created.extend(self.bisect(eid))
        return created

    # -- point location ----------------------------------------------------

    def tri_bary(self, t, p):
        """Barycentric coordinates of point ``p`` in triangle ``t``."""
        pts = self.points
        n0, n1, n2 = self.tris[t]
        v0 = pts[n1] - pts[n0]
        v1 = pts[n2] - pts[n0]
        v2 = np.asarray(p, dtype=float) - pts[n0]
        den = v0[0] * v1[1] - v0[1] * v1[0]
        b1 = (v2[0] * v1[1] - v2[1] * v1[0]) / den
        b2 = (v0[0] * v2[1] - v0[1] * v2[0]) / den
        return np.array([1.0 - b1 - b2, b1, b2])

    def _build_locator(self):
        pts = self.points
        ids = np.fromiter(self.tris.keys(), dtype=np.int64)
        verts = np.array([self.tris[t] for t in ids], dtype=np.int64)
        tx = pts[:, 0][verts]
        ty = pts[:, 1][verts]
        lo = np.column_stack([tx.min(axis=1), ty.min(axis=1)])
        hi = np.column_stack([tx.max(axis=1), ty.max(axis=1)])
        xmin, ymin = pts.min(axis=0)
        xmax, ymax = pts.max(axis=0)
        ng = int(np.clip(np.sqrt(2 * len(ids)) + 1, 1, 1024))
        sx = (xmax - xmin) / ng or 1.0
        sy = (ymax - ymin) / ng or 1.0
        bins = [[] for _ in range(ng * ng)]
        i0 = np.clip(((lo[:, 0] - xmin) / sx).astype(int), 0, ng - 1)
        i1 = np.clip(((hi[:, 0] - xmin) / sx).astype(int), 0, ng - 1)
        j0 = np.clip(((lo[:, 1] - ymin) / sy).astype(int), 0, ng - 1)
        j1 = np.clip(((hi[:, 1] - ymin) / sy).astype(int), 0, ng - 1)
        for k, t in enumerate(ids):
            for i in range(i0[k], i1[k] + 1):
                for j in range(j0[k], j1[k] + 1):
                    bins[i * ng + j].append(int(t))
        self._locator = (xmin, ymin, xmax, ymax, sx, sy, ng, bins)

    def locate(self, p):
        """Id of a triangle whose closed hull contains ``p``, or None.

        Points on shared edges or vertices resolve to the lowest incident
        triangle id.
        """
        if self._locator is None:
            self._build_locator()
        xmin, ymin, xmax, ymax, sx, sy, ng, bins = self._locator
        x, y = float(p[0]), float(p[1])
        pad = 1e-12
        if x < xmin - pad or x > xmax + pad or y < ymin - pad or y > ymax + pad:
            return None
        i = min(max(int((x - xmin) / sx), 0), ng - 1)
        j = min(max(int((y - ymin) / sy), 0), ng - 1)
        best = None
        for t in bins[i * ng + j]:
            if t in self.tris and self.tri_bary(t, (x, y)).min() >= -BARY_TOL:
                if best is None or t < best:
                    best = t
        return best

    # -- derived metrics ----------------------------------------------------

    def near_boundary_ratio(self, radius):
        """Fraction of interior nodes closer than ``radius`` to a boundary node."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        flags = np.asarray(self.node_boundary, dtype=bool)
        interior = self.points[~flags]
        if len(interior) == 0:
            raise ZeroInterior("mesh has no interior nodes")
        boundary = self.points[flags]
        d, _ = cKDTree(boundary).query(interior, k=1)
        return float(np.count_nonzero(d < radius)) / len(interior)

    # -- consistency ---------------------------------------------------------

    def validate(self):
        """Raise AssertionError if any structural invariant is violated."""
        for eid, ts in self.edge_tris.items():
            assert 1 <= len(ts) <= 2, f"edge {eid} has {len(ts)} incident triangles"
            a, b = self.edges[eid]
            for t in ts:
                assert t in self.tris, f"edge {eid} references dead triangle {t}"
                assert a in self.tris[t] and b in self.tris[t]
        derived = self._derive_boundary_flags()
        for tid, (a, b, v) in self.tris.items():
            assert len({a, b, v}) == 3, f"triangle {tid} has repeated vertices"
            assert self.tri_area(tid) > 0, f"triangle {tid} is not counter-clockwise"
            for eid in self.tri_edge_ids(tid):
                assert eid is not None and tid in self.edge_tris[eid]
        for n in range(self.n_nodes):
            assert self.node_boundary[n] == derived[n], f"boundary flag mismatch at node {n}"
        for n, ts in self.node_tris.items():
            for t in ts:
                assert n in self.tris[t]

    def _derive_boundary_flags(self):
        flags = [False] * self.n_nodes
        for eid, ts in self.edge_tris.items():
            if len(ts) == 1:
                a, b = self.edges[eid]
                flags[a] = flags[b] = True
        return flags

    def _recompute_boundary_flags(self):
        self.node_boundary = self._derive_boundary_flags()

    # -- submesh extraction ---------------------------------------------------

    def copy_submesh(self, tri_ids):
        """Standalone copy of a subset of triangles.

        Returns
        -------
        (TriMesh, dict, dict)
            The submesh, a map old node id -> new node id, and a map
            old triangle id -> new triangle id.  Newest-node labels are
            preserved; boundary flags are recomputed for the subset.
        """
        tri_ids = sorted(tri_ids)
        nodes = sorted({n for t in tri_ids for n in self.tris[t]})
        node_map = {n: i for i, n in enumerate(nodes)}
        sub = TriMesh()
        for n in nodes:
            sub._add_node(self.xs[n], self.ys[n], boundary=False, parents=None)
        tri_map = {}
        for t in tri_ids:
            a, b, v = self.tris[t]
            tri_map[t] = sub._add_tri(node_map[a], node_map[b], node_map[v])
        sub._recompute_boundary_flags()
        sub._bump()
        return sub, node_map, tri_map


def _signed_area(p0, p1, p2):
    return (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])


def build_square_mesh(refine_level=0):
    """Isosceles right triangulation of the unit square.

    Level 0 is a 5x5 node grid (25 nodes, 32 triangles).  Each further level
    applies one uniform refinement (two bisection passes), doubling the
    resolution.  The hypotenuse of every triangle is its base edge.
    """
    if refine_level < 0:
        raise ValueError("refine_level must be >= 0")
    n = 4
    h = 1.0 / n
    mesh = TriMesh()
    for j in range(n + 1):
        for i in range(n + 1):
            mesh._add_node(i * h, j * h, boundary=False, parents=None)
    nid = lambda i, j: j * (n + 1) + i
    for j in range(n):
        for i in range(n):
            p00, p10 = nid(i, j), nid(i + 1, j)
            p01, p11 = nid(i, j + 1), nid(i + 1, j + 1)
            # diagonal p00-p11 is the base edge of both triangles
            mesh._add_tri(p11, p00, p10)
            mesh._add_tri(p00, p11, p01)
    mesh._recompute_boundary_flags()
    mesh._bump()
    for _ in range(refine_level):
        mesh.uniform_refine()
        mesh.uniform_refine()
        mesh._recompute_boundary_flags()
    return mesh


def uniform_refine(mesh):
    """One uniform bisection pass over all triangles (mutates and returns mesh)."""
    mesh.uniform_refine()
    return mesh


def bisect(mesh, edge_id):
    """Bisect one edge; returns the set of new node ids."""
    return {ev.node for ev in mesh.bisect(edge_id)}


def locate(mesh, p):
    return mesh.locate(p)


def near_boundary_ratio(mesh, radius):
    return mesh.near_boundary_ratio(radius)


# -- trimming ---------------------------------------------------------------


def trim_to_irregular(mesh, data):
    """Remove triangles that contain no data point.

    Triangles are retained when they contain at least one data point or when
    they bridge otherwise disconnected data-bearing components; connectivity
    is restored by breadth-first search from the largest component.  Returns
    a new mesh with renumbered nodes and recomputed boundary flags.
    """
    counts = {t: 0 for t in mesh.tris}
    for p in np.asarray(data.x, dtype=float):
        t = mesh.locate(p)
        if t is not None:
            counts[t] += 1
    bearing = {t for t, c in counts.items() if c > 0}
    if not bearing:
        raise EmptyResult("no triangle contains a data point")
    retained = _connect_components(mesh, bearing)
    sub, _, _ = mesh.copy_submesh(retained)
    return sub


def _tri_neighbors(mesh, t):
    out = []
    for eid in mesh.tri_edge_ids(t):
        for u in mesh.edge_tris[eid]:
            if u != t:
                out.append(u)
    return out


def _connect_components(mesh, bearing):
    comps = []
    seen = set()
    for t in sorted(bearing):
        if t in seen:
            continue
        comp, queue = {t}, [t]
        seen.add(t)
        while queue:
            u = queue.pop()
            for v in _tri_neighbors(mesh, u):
                if v in bearing and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    queue.append(v)
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), min(c)))
    retained = set(comps[0])
    pending = comps[1:]
    while pending:
        # BFS through all triangles until another component is reached
        parent = {t: None for t in retained}
        frontier = sorted(retained)
        hit = None
        while frontier and hit is None:
            nxt = []
            for u in frontier:
                for v in sorted(_tri_neighbors(mesh, u)):
                    if v in parent:
                        continue
                    parent[v] = u
                    for i, comp in enumerate(pending):
                        if v in comp:
                            hit = (v, i)
                            break
                    if hit:
                        break
                    nxt.append(v)
                if hit:
                    break
            frontier = nxt
        if hit is None:
            raise EmptyResult("disconnected data components cannot be bridged")
        v, i = hit
        while v is not None and v not in retained:
            retained.add(v)
            v = parent[v]
        retained |= pending.pop(i)
    return retained


# -- polygon domains -----------------------------------------------------------


def point_in_polygon(p, loop):
    """Even-odd ray-casting containment test for one closed loop."""
    x, y = float(p[0]), float(p[1])
    inside = False
    n = len(loop)
    for i in range(n):
        x0, y0 = loop[i]
        x1, y1 = loop[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < xc:
                inside = not inside
    return inside


def in_polygon_domain(p, loops):
    """True if inside the outer loop and outside every hole loop."""
    if not point_in_polygon(p, loops[0]):
        return False
    return not any(point_in_polygon(p, hole) for hole in loops[1:])


def mesh_polygon(loops, refine_level=3):
    """Mesh a polygonal domain by trimming a fine square mesh.

    The square seed mesh is scaled uniformly onto the polygon's bounding
    square (preserving the isosceles right triangles), then triangles whose
    centroid falls outside the domain are removed.
    """
    loops = [np.asarray(l, dtype=float) for l in loops]
    allpts = np.vstack(loops)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    side = max(hi - lo)
    if side <= 0:
        raise ValueError("degenerate polygon extent")
    centre = 0.5 * (lo + hi)
    mesh = build_square_mesh(refine_level)
    for n in range(mesh.n_nodes):
        mesh.xs[n] = centre[0] + (mesh.xs[n] - 0.5) * side
        mesh.ys[n] = centre[1] + (mesh.ys[n] - 0.5) * side
    mesh._bump()
    pts = mesh.points
    keep = set()
    for t, (a, b, v) in mesh.tris.items():
        centroid = (pts[a] + pts[b] + pts[v]) / 3.0
        if in_polygon_domain(centroid, loops):
            keep.add(t)
    if not keep:
        raise EmptyResult("polygon contains no triangle centroid")
    retained = _connect_components(mesh, keep)
    # only keep bridges that stay inside the domain: polygon trimming is
    # authoritative, so restrict to the largest inside component instead
    retained &= keep
    comps = _components_of(mesh, retained)
    comps.sort(key=lambda c: (-len(c), min(c)))
    sub, _, _ = mesh.copy_submesh(comps[0])
    return sub


def _components_of(mesh, tri_set):
    comps, seen = [], set()
    for t in sorted(tri_set):
        if t in seen:
            continue
        comp, queue = {t}, [t]
        seen.add(t)
        while queue:
            u = queue.pop()
            for v in _tri_neighbors(mesh, u):
                if v in tri_set and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    queue.append(v)
        comps.append(comp)
    return comps


# -- file formats ------------------------------------------------------------


def save_mesh(mesh, path):
    """Write a mesh in the text format ``tpsfem-mesh v1``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MESH_SCHEMA}\n")
        fh.write(f"nodes {mesh.n_nodes}\n")
        for n in range(mesh.n_nodes):
            fh.write(f"{n} {float(mesh.xs[n])!r} {float(mesh.ys[n])!r} "
                     f"{1 if mesh.node_boundary[n] else 0}\n")
        fh.write(f"tris {mesh.n_tris}\n")
        for t in sorted(mesh.tris):
            a, b, v = mesh.tris[t]
            fh.write(f"{t} {a} {b} {v} 2\n")


def load_mesh(path):
    """Read a mesh written by :func:`save_mesh`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    if not lines or lines[0] != MESH_SCHEMA:
        raise ParseError(f"expected header {MESH_SCHEMA!r}", line=1)
    k = 1
    try:
        tag, n = lines[k].split()
        assert tag == "nodes"
        n = int(n)
    except Exception:
        raise ParseError("expected 'nodes N'", line=k + 1) from None
    pts, flags = [], []
    for i in range(n):
        k += 1
        parts = lines[k].split()
        if len(parts) != 4:
            raise ParseError("expected 'id x1 x2 boundary'", line=k + 1)
        pts.append((float(parts[1]), float(parts[2])))
        flags.append(parts[3] == "1")
    k += 1
    try:
        tag, m = lines[k].split()
        assert tag == "tris"
        m = int(m)
    except Exception:
        raise ParseError("expected 'tris M'", line=k + 1) from None
    tris, newest = [], []
    for i in range(m):
        k += 1
        parts = lines[k].split()
        if len(parts) != 5:
            raise ParseError("expected 'id n0 n1 n2 newest_idx'", line=k + 1)
        tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
        newest.append(int(parts[4]))
    mesh = TriMesh.from_arrays(pts, tris, newest)
    if mesh.node_boundary != flags:
        raise ParseError("stored boundary flags contradict edge incidence")
    return mesh


def save_polygon(loops, path):
    with open(path, "w", encoding="utf-8") as fh:
        for loop in loops:
            fh.write(f"loop {len(loop)}\n")
            for x, y in loop:
                fh.write(f"{float(x)!r} {float(y)!r}\n")


def load_polygon(path):
    """Read closed polyline loops; the first loop is the outer boundary."""
    loops = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    k = 0
    while k < len(lines):
        parts = lines[k].split()
        if parts[0] != "loop" or len(parts) != 2:
            raise ParseError("expected 'loop K'", line=k + 1)
        cnt = int(parts[1])
        loop = []
        for i in range(cnt):
            k += 1
            xy = lines[k].split()
            if len(xy) != 2:
                raise ParseError("expected 'x1 x2'", line=k + 1)
            loop.append((float(xy[0]), float(xy[1])))
        loops.append(np.asarray(loop))
        k += 1
    if not loops:
        raise ParseError("polygon file has no loops")
    return loops
