"""Dirichlet boundary values and their initialisation during refinement.

Boundary values of the surface coefficients c, the gradient fields g1, g2
and the multiplier w are prescribed at every boundary node.  For real data
they are approximated by a thin plate spline fitted to a small subsample;
during refinement new boundary nodes are initialised either from the same
spline ("tps_approximation") or as the average of the two endpoints of the
bisected boundary edge ("nodal_average"), which keeps the boundary trace of
the surface piecewise linear and avoids spurious refinement near boundaries.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import NoNeighbors


@dataclass
class BoundaryStrategy:
    """How to produce Dirichlet values for new boundary nodes.

    kind is one of "tps_approximation", "nodal_average" or "constant".
    Both TPS strategies keep a fitted TpsModel; nodal_average still uses it
    for the initial mesh, then averages afterwards.
    """
    kind: str = "nodal_average"
    constant_value: float = 0.0
    tps: object = None

    def __post_init__(self):
        if self.kind not in ("tps_approximation", "nodal_average", "constant"):
            raise ValueError(f"unknown boundary strategy {self.kind!r}")
        if self.kind == "tps_approximation" and self.tps is None:
            raise ValueError("tps_approximation requires a fitted TpsModel")


@dataclass
class BoundaryValues:
    """Per-boundary-node Dirichlet data.

    ``nodes`` are the boundary node ids in increasing order and the value
    arrays are parallel to it.  When ``w_proxy`` is set, the multiplier value
    is derived as w = -alpha * w_proxy at system build time so that w stays
    consistent with the current smoothing parameter.
    """
    nodes: np.ndarray
    c: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    w: np.ndarray
    w_proxy: np.ndarray = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=int)
        for name in ("c", "g1", "g2", "w"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != self.nodes.shape:
                raise ValueError(f"boundary array {name} has wrong length")
            setattr(self, name, v)

    def w_at(self, alpha):
        if self.w_proxy is not None:
            return -alpha * np.asarray(self.w_proxy, dtype=float)
        return self.w


def initial_boundary_values(mesh, tps, alpha):
    """Evaluate a fitted TPS at all boundary nodes.

    Each boundary node receives c = t(x), (g1, g2) = grad t(x) and
    w = -alpha * laplacian_proxy(x).
    """
    nodes = np.asarray(mesh.boundary_nodes(), dtype=int)
    pts = mesh.points[nodes]
    c = tps.eval(pts)
    grad = tps.eval_grad(pts)
    proxy = tps.eval_laplacian_proxy(pts)
    return BoundaryValues(nodes=nodes, c=c, g1=grad[:, 0], g2=grad[:, 1],
                          w=-alpha * proxy, w_proxy=proxy)


def boundary_values_from_callables(mesh, value_fn, grad_fn, laplacian_fn, alpha):
    """Boundary values from a known model function and its derivatives."""
    nodes = np.asarray(mesh.boundary_nodes(), dtype=int)
    pts = mesh.points[nodes]
    c = np.asarray(value_fn(pts[:, 0], pts[:, 1]), dtype=float)
    g1, g2 = grad_fn(pts[:, 0], pts[:, 1])
    lap = np.asarray(laplacian_fn(pts[:, 0], pts[:, 1]), dtype=float)
    return BoundaryValues(nodes=nodes, c=c,
                          g1=np.asarray(g1, dtype=float) * np.ones(len(nodes)),
                          g2=np.asarray(g2, dtype=float) * np.ones(len(nodes)),
                          w=-alpha * lap, w_proxy=lap)


def constant_boundary_values(mesh, value):
    """Legacy behaviour: constant c, zero gradients and multiplier."""
    nodes = np.asarray(mesh.boundary_nodes(), dtype=int)
    zeros = np.zeros(len(nodes))
    return BoundaryValues(nodes=nodes, c=np.full(len(nodes), float(value)),
                          g1=zeros.copy(), g2=zeros.copy(), w=zeros.copy(),
                          w_proxy=zeros.copy())


def new_boundary_node_values(strategy, mesh, new_node, neighbors, node_values,
                             alpha=1.0):
    """Dirichlet values for one boundary node created by edge bisection.

    Parameters
    ----------
    strategy : BoundaryStrategy
    new_node : int
        Id of the created boundary node.
    neighbors : sequence of int
        The two boundary endpoints of the bisected boundary edge.
    node_values : mapping
        Arrays "c", "g1", "g2", "w", "w_proxy" over all mesh nodes holding
        the current values (used by nodal_average).
    alpha : float
        Current smoothing parameter (sets w from the Laplacian proxy on the
        tps_approximation path).

    Returns
    -------
    (c, g1, g2, w, w_proxy)
    """
    if strategy.kind == "constant":
        return strategy.constant_value, 0.0, 0.0, 0.0, 0.0
    if strategy.kind == "tps_approximation":
        p = np.array([mesh.node_xy(new_node)])
        c = float(strategy.tps.eval(p)[0])
        g = strategy.tps.eval_grad(p)[0]
        proxy = float(strategy.tps.eval_laplacian_proxy(p)[0])
        return c, float(g[0]), float(g[1]), -alpha * proxy, proxy
    if not neighbors or len(neighbors) != 2:
        raise NoNeighbors(f"boundary node {new_node} has no endpoint pair")
    a, b = neighbors
    out = tuple(0.5 * (node_values[k][a] + node_values[k][b])
                for k in ("c", "g1", "g2", "w", "w_proxy"))
    return out
