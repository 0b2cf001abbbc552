"""Cotangent finite elements and the circumcenter kite lattice.

Joining every triangle's circumcenter to its three vertices turns a Delaunay
triangulation into an orthogonal quadrilateral lattice: each interior edge
``z1 z3`` of the triangulation becomes the B diagonal of the face
``z1 c' z3 c``, where ``c`` and ``c'`` are the circumcenters of the two
triangles sharing that edge. The face conductance equals the cotangent
weight of the edge, so the P1 finite element solution coincides with the
discrete harmonic function on the kite lattice at the triangulation
vertices.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.spatial import Delaunay

from .errors import (
    DegenerateCircumcenter,
    DegenerateTriangle,
    EmptyLattice,
    IrregularBoundary,
    NotDelaunay,
    ParseError,
    SolverDiverged,
)
from .lattice import QuadLattice, require_valid, shoelace
from .operators import conductances
from .solver import DENSE_LIMIT, DirichletProblem, pcg, solve_dirichlet

SLACK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Triangulation:
    points: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_triangles(cls, points, triangles):
        """Orient triangles counterclockwise and extract the boundary cycle."""
        pts = np.array(points, dtype=float).reshape(-1, 2)
        tri = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        area = shoelace(pts[tri])
        if np.any(area == 0):
            raise DegenerateTriangle(f"zero-area triangles {np.flatnonzero(area == 0)[:10]}")
        tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
        return cls(pts, tri, _tri_boundary(tri))

    @classmethod
    def delaunay(cls, points):
        """Delaunay triangulation of the convex hull of ``points``."""
        pts = np.asarray(points, dtype=float)
        return cls.from_triangles(pts, Delaunay(pts).simplices)

    @property
    def n_vertices(self):
        return len(self.points)

    def edge_table(self):
        """Interior and boundary edge tables.

        Returns ``(interior, boundary)``. ``interior`` rows are
        ``(a, b, t_left, t_right, k_left, k_right)``: the edge ``a -> b`` lies
        in triangle ``t_left`` (counterclockwise) and ``b -> a`` in
        ``t_right``; ``k_*`` is the local index of the vertex opposite the
        edge. ``boundary`` rows are ``(a, b, t, k)``.
        """
        if "edges" in self._cache:
            return self._cache["edges"]
        tri = self.triangles
        m = len(tri)
        heads = tri.ravel()
        tails = np.roll(tri, -1, axis=1).ravel()
        owner = np.repeat(np.arange(m), 3)
        opp = np.tile(np.array([2, 0, 1]), m)
        key = {}
        for a, b, t, k in zip(heads.tolist(), tails.tolist(), owner.tolist(), opp.tolist()):
            if (a, b) in key:
                raise DegenerateTriangle(f"directed edge {a}->{b} used twice")
            key[(a, b)] = (t, k)
        interior, boundary = [], []
        for (a, b), (t, k) in key.items():
            other = key.get((b, a))
            if other is None:
                boundary.append((a, b, t, k))
            elif a < b:
                interior.append((a, b, t, other[0], k, other[1]))
        res = (np.array(interior, dtype=np.int64).reshape(-1, 6), np.array(boundary, dtype=np.int64).reshape(-1, 4))
        self._cache["edges"] = res
        return res

    def angles(self):
        """Interior angles, shape (m, 3); column k is the angle at vertex k."""
        p = self.points[self.triangles]
        out = np.empty((len(p), 3))
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
            dot = np.einsum("ij,ij->i", u, v)
            out[:, k] = np.arctan2(np.abs(cross), dot)
        return out

    def cotangents(self):
        """cot of every interior angle, computed without trigonometry."""
        p = self.points[self.triangles]
        out = np.empty((len(p), 3))
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
            out[:, k] = np.einsum("ij,ij->i", u, v) / cross
        return out

    def area(self):
        return float(shoelace(self.points[self.triangles]).sum())


def _tri_boundary(tri):
    heads = tri.ravel()
    tails = np.roll(tri, -1, axis=1).ravel()
    directed = set(zip(heads.tolist(), tails.tolist()))
    nxt = {}
    for a, b in directed:
        if (b, a) not in directed:
            if a in nxt:
                raise DegenerateTriangle(f"boundary pinches at vertex {a}")
            nxt[a] = b
    if not nxt:
        return np.array([], dtype=np.int64)
    start = min(nxt)
    cycle = [start]
    cur = nxt[start]
    while cur != start:
        cycle.append(cur)
        cur = nxt[cur]
        if len(cycle) > len(nxt):
            raise DegenerateTriangle("boundary is not a simple cycle")
    if len(cycle) != len(nxt):
        raise DegenerateTriangle("boundary has several components")
    return np.array(cycle, dtype=np.int64)


def cot_weight(alpha, beta):
    """``(cot alpha + cot beta) / 2``."""
    return (1.0 / math.tan(alpha) + 1.0 / math.tan(beta)) / 2.0


@dataclass(frozen=True)
class DelaunayReport:
    is_delaunay: bool
    min_slack: float
    regular_boundary: bool
    condition_D_slack: float


def delaunay_report(T: Triangulation) -> DelaunayReport:
    """Opposite-angle sums across interior edges and the boundary conditions."""
    ang = T.angles()
    if np.any(ang <= 0) or np.any(~np.isfinite(ang)):
        raise DegenerateTriangle("triangle with a zero angle")
    interior, boundary = T.edge_table()
    if len(interior):
        slack = math.pi - (ang[interior[:, 2], interior[:, 4]] + ang[interior[:, 3], interior[:, 5]])
        min_slack = float(slack.min())
    else:
        min_slack = math.inf
    per_tri = np.bincount(boundary[:, 2], minlength=len(T.triangles)) if len(boundary) else np.zeros(0)
    regular = bool(
        np.all(per_tri <= 1) and (not len(boundary) or np.all(ang[boundary[:, 2], boundary[:, 3]] < math.pi / 2))
    )
    return DelaunayReport(min_slack >= -SLACK_TOL, min_slack, regular, min_slack)


def circumcenters(T: Triangulation):
    p = T.points[T.triangles]
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ba = b - a
    ca = c - a
    d = 2.0 * (ba[:, 0] * ca[:, 1] - ba[:, 1] * ca[:, 0])
    edges = np.stack([ba, ca, c - b], axis=1)
    longest = np.max(np.einsum("ijk,ijk->ij", edges, edges), axis=1)
    bad = np.abs(d) / 2 < 2e-14 * longest
    if np.any(bad):
        raise DegenerateCircumcenter(f"near-collinear triangles {np.flatnonzero(bad)[:10]}")
    b2 = np.einsum("ij,ij->i", ba, ba)
    c2 = np.einsum("ij,ij->i", ca, ca)
    ux = (ca[:, 1] * b2 - ba[:, 1] * c2) / d
    uy = (ba[:, 0] * c2 - ca[:, 0] * b2) / d
    return a + np.c_[ux, uy]


@dataclass(frozen=True, eq=False)
class KiteMap:
    """Index maps from a triangulation to its kite lattice."""

    vertex: np.ndarray  # T vertex -> lattice vertex, -1 if dropped
    triangle: np.ndarray  # T triangle -> lattice vertex of its circumcenter
    edge: np.ndarray  # lattice face -> row of the interior edge table


def build_kite_lattice(T: Triangulation, return_map: bool = False):
    """Orthogonal lattice with B = triangulation vertices, W = circumcenters.

    Requires every interior edge to have positive opposite-angle slack and
    every angle facing a boundary edge to be acute. A triangle with two
    boundary edges contributes no lattice vertex for its tip.
    """
    rep = delaunay_report(T)
    if rep.min_slack < -SLACK_TOL:
        raise NotDelaunay(f"opposite angles exceed pi by {-rep.min_slack:.3e}")
    if rep.min_slack <= SLACK_TOL:
        raise NotDelaunay(f"opposite angle slack {rep.min_slack:.3e} is not positive")
    interior, boundary = T.edge_table()
    if not len(interior):
        raise EmptyLattice("triangulation has no interior edge")
    ang = T.angles()
    if len(boundary) and not np.all(ang[boundary[:, 2], boundary[:, 3]] < math.pi / 2):
        raise IrregularBoundary("an angle facing a boundary edge is not acute")
    cc = circumcenters(T)
    used_v = np.zeros(T.n_vertices, dtype=bool)
    used_v[interior[:, :2].ravel()] = True
    used_t = np.zeros(len(T.triangles), dtype=bool)
    used_t[interior[:, 2:4].ravel()] = True
    vmap = np.full(T.n_vertices, -1, dtype=np.int64)
    vmap[used_v] = np.arange(used_v.sum())
    tmap = np.full(len(T.triangles), -1, dtype=np.int64)
    tmap[used_t] = used_v.sum() + np.arange(used_t.sum())
    pts = np.vstack([T.points[used_v], cc[used_t]])
    a, b, tl, tr = interior[:, 0], interior[:, 1], interior[:, 2], interior[:, 3]
    faces = np.c_[vmap[a], tmap[tr], vmap[b], tmap[tl]]
    Q = QuadLattice.from_faces(pts, faces)
    if Q.kind != "orthogonal":
        raise DegenerateCircumcenter("kite faces are not orthogonal to tolerance")
    try:
        require_valid(Q)
    except Exception as exc:
        raise IrregularBoundary(f"kite lattice is not a valid lattice: {exc}") from None
    if return_map:
        order = np.arange(len(interior))
        return Q, KiteMap(vmap, tmap, order)
    return Q


def kite_area_balance(T: Triangulation, Q: QuadLattice):
    """``(kite faces + boundary cells, polygon area)``.

    Boundary cells are the triangles ``z1 z3 c`` cut off along each boundary
    edge, ``c`` the circumcenter of the adjacent triangle.
    """
    _, boundary = T.edge_table()
    cc = circumcenters(T)
    cells = np.stack([T.points[boundary[:, 0]], T.points[boundary[:, 1]], cc[boundary[:, 2]]], axis=1)
    total = float(Q.areas.sum() + shoelace(cells).sum())
    return total, T.area()


# finite elements --------------------------------------------------------


def stiffness(T: Triangulation):
    """P1 stiffness matrix: edge weights ``(cot alpha + cot beta) / 2``."""
    cot = T.cotangents()
    tri = T.triangles
    n = T.n_vertices
    rows, cols, vals = [], [], []
    for k in range(3):
        i = tri[:, (k + 1) % 3]
        j = tri[:, (k + 2) % 3]
        w = cot[:, k] / 2
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    K = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    K.sum_duplicates()
    return K


def _boundary_data(T, g):
    b = T.boundary
    if callable(g):
        vals = np.broadcast_to(np.asarray(g(T.points[b, 0], T.points[b, 1]), dtype=float), b.shape)
    else:
        vals = np.array([g[int(v)] for v in b], dtype=float)
    return b, vals


def solve_fem(T: Triangulation, g, tol: float = 1e-12):
    """Piecewise-linear finite element solution with Dirichlet data ``g``.

    ``g`` is a vectorized callable ``g(x, y)`` or a mapping from boundary
    vertices to values.
    """
    rep = delaunay_report(T)
    if not rep.is_delaunay:
        warnings.warn("triangulation is not Delaunay; cotangent weights may be negative", stacklevel=2)
    K = stiffness(T)
    b, vals = _boundary_data(T, g)
    n = T.n_vertices
    inner = np.setdiff1d(np.arange(n), b)
    u = np.zeros(n)
    u[b] = vals
    if len(inner):
        A = K[inner][:, inner].tocsr()
        rhs = -(K[inner][:, b] @ vals)
        ref = max(float(np.max(np.abs(vals))), 1e-300)
        if len(inner) < DENSE_LIMIT:
            u[inner] = scipy.linalg.solve(A.toarray(), rhs, assume_a="sym")
        else:
            x, it, ok = pcg(A, rhs, tol=0.0, atol=tol * ref)
            if not ok:
                raise SolverDiverged(f"finite element solve stalled after {it} iterations")
            u[inner] = x
    return u


def kite_equivalence(T: Triangulation, g, tol: float = 1e-13):
    """Max over triangulation vertices of |FEM solution - kite lattice solution|.

    ``g`` is a vectorized callable; the kite lattice takes its values at its
    own boundary vertices, circumcenters included.
    """
    Q, kmap = build_kite_lattice(T, return_map=True)
    u_fem = solve_fem(T, g, tol=tol)
    prob = DirichletProblem.from_function(Q, g)
    u_q = solve_dirichlet(prob, tol=tol).solution
    keep = kmap.vertex >= 0
    return float(np.max(np.abs(u_fem[keep] - u_q[kmap.vertex[keep]])))


def kite_conductance_gap(T: Triangulation, Q: QuadLattice | None = None):
    """Max relative gap between kite conductances and cotangent weights."""
    if Q is None:
        Q = build_kite_lattice(T)
    interior, _ = T.edge_table()
    cot = T.cotangents()
    w = (cot[interior[:, 2], interior[:, 4]] + cot[interior[:, 3], interior[:, 5]]) / 2
    c = conductances(Q)
    # faces follow the interior edge table order
    return float(np.max(np.abs(c - w) / np.abs(w)))


# mesh generators ----------------------------------------------------------


def disk_mesh(spacing: float, seed: int = 0, radius: float = 1.0, center=(0.0, 0.0), smooth: int = 3):
    """Seeded Delaunay mesh of a disk with vertices on the circle.

    Interior points start on a jittered triangular grid of the given
    spacing, at least ``0.7 * spacing`` inside the circle, and are moved to
    the mean of their neighbors ``smooth`` times. Smoothing keeps the
    opposite-angle slack away from zero near the circle.
    """
    rng = np.random.default_rng(seed)
    nb = max(6, int(round(2 * math.pi * radius / spacing)))
    t = 2 * math.pi * np.arange(nb) / nb + rng.uniform(0, 2 * math.pi / nb)
    ring = np.c_[np.cos(t), np.sin(t)] * radius
    dy = spacing * math.sqrt(3) / 2
    ny = int(radius / dy) + 2
    nx = int(radius / spacing) + 2
    J, I = np.mgrid[-ny : ny + 1, -nx : nx + 1]
    grid = np.c_[(I + 0.5 * (J % 2)).ravel() * spacing, J.ravel() * dy]
    grid += rng.uniform(-0.1, 0.1, size=grid.shape) * spacing
    grid = grid[np.hypot(grid[:, 0], grid[:, 1]) < radius - 0.7 * spacing]
    pts = np.vstack([ring, grid])
    n = len(pts)
    for _ in range(smooth):
        tri = Delaunay(pts).simplices
        i = np.concatenate([tri[:, 0], tri[:, 1], tri[:, 2]])
        j = np.concatenate([tri[:, 1], tri[:, 2], tri[:, 0]])
        adj = sparse.coo_matrix((np.ones(2 * len(i)), (np.r_[i, j], np.r_[j, i])), shape=(n, n)).tocsr()
        adj.data[:] = 1.0
        deg = np.asarray(adj.sum(axis=1)).ravel()
        pts[nb:] = (adj @ pts)[nb:] / deg[nb:, None]
    return Triangulation.delaunay(pts + np.asarray(center, dtype=float))


def hexagon_fan(radius: float = 1.0):
    """Regular hexagon split into six triangles around its center."""
    t = np.arange(6) * math.pi / 3
    pts = np.vstack([[0.0, 0.0], np.c_[np.cos(t), np.sin(t)] * radius])
    tris = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return Triangulation.from_triangles(pts, tris)


def triangular_patch(rows: int, cols: int, side: float = 1.0):
    """Parallelogram patch of the regular triangular lattice."""
    h = side * math.sqrt(3) / 2
    idx = {}
    pts = []
    for j in range(rows + 1):
        for i in range(cols + 1):
            idx[(i, j)] = len(pts)
            pts.append((side * (i + 0.5 * j), h * j))
    tris = []
    for j in range(rows):
        for i in range(cols):
            tris.append((idx[(i, j)], idx[(i + 1, j)], idx[(i, j + 1)]))
            tris.append((idx[(i + 1, j)], idx[(i + 1, j + 1)], idx[(i, j + 1)]))
    return Triangulation.from_triangles(pts, tris)


def equilateral_pair(side: float = 1.0):
    """Two equilateral triangles sharing the edge from 0 to ``side``."""
    h = side * math.sqrt(3) / 2
    pts = [(0.0, 0.0), (side, 0.0), (side / 2, h), (side / 2, -h)]
    return Triangulation.from_triangles(pts, [(0, 1, 2), (1, 0, 3)])


# file I/O ---------------------------------------------------------------


def save_triangulation(T: Triangulation, path):
    doc = {
        "points": [[float(x), float(y)] for x, y in T.points],
        "triangles": T.triangles.tolist(),
        "boundary": T.boundary.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_triangulation(path) -> Triangulation:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    for key in ("points", "triangles"):
        if not isinstance(doc.get(key), list):
            raise ParseError("missing or not a list", field=key)
    for k, t in enumerate(doc["triangles"]):
        if not (isinstance(t, list) and len(t) == 3):
            raise ParseError(f"triangle arity {len(t) if isinstance(t, list) else '?'}", field=f"triangles[{k}]")
    T = Triangulation.from_triangles(doc["points"], doc["triangles"])
    if "boundary" in doc and sorted(doc["boundary"]) != sorted(T.boundary.tolist()):
        raise ParseError("boundary does not match the triangles", field="boundary")
    return T
