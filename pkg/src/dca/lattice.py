"""Finite quadrilateral lattices.

A lattice is stored as a vertex array, a face array and the boundary cycle.
Faces are kept in a normalized cyclic order ``(z1, z2, z3, z4)``:

* the shoelace area of the stored order is positive (counterclockwise with
  the y axis pointing up);
* ``z1`` and ``z3`` belong to the graph B, ``z2`` and ``z4`` to the graph W.

The vertex with the smallest index is always colored B.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.spatial import cKDTree

from .domains import Disk, Rect
from .errors import (
    DegenerateFace,
    EmptyLattice,
    InvalidStep,
    NotBipartite,
    NotOnBoundary,
    ParseError,
    ValidationError,
)

B, W = 0, 1
KINDS = ("square", "orthogonal", "general")
ORTHO_TOL = 1e-9


def shoelace(p):
    """Signed area of polygons ``p`` with shape (..., k, 2)."""
    x = p[..., 0]
    y = p[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


def diagonal_cosines(quads):
    """|cos| of the angle between the two diagonals of each quad, shape (m,)."""
    d13 = quads[:, 2] - quads[:, 0]
    d24 = quads[:, 3] - quads[:, 1]
    n13 = np.hypot(d13[:, 0], d13[:, 1])
    n24 = np.hypot(d24[:, 0], d24[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(np.einsum("ij,ij->i", d13, d24)) / (n13 * n24)


@dataclass(frozen=True, eq=False)
class QuadLattice:
    """Immutable quadrilateral lattice; build with :meth:`from_faces`."""

    points: np.ndarray
    faces: np.ndarray
    boundary: np.ndarray
    color: np.ndarray
    kind: str = "general"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("points", "faces", "boundary", "color"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @classmethod
    def from_faces(cls, points, faces, boundary=None, kind=None):
        """Normalize face orders, color the vertices and find the boundary.

        A supplied ``boundary`` is kept verbatim so that :func:`validate` can
        report a malformed cycle; when omitted it is extracted from the faces.
        """
        pts = np.array(points, dtype=float).reshape(-1, 2)
        fcs = np.array(faces, dtype=np.int64).reshape(-1, 4)
        if len(fcs) and (fcs.min() < 0 or fcs.max() >= len(pts)):
            raise IndexError("face refers to a vertex index out of range")
        fcs = _orient_faces(pts, fcs)
        color, ok = _two_coloring(len(pts), fcs)
        if ok:
            fcs = _rotate_b_first(fcs, color)
        if boundary is None:
            cycle = _boundary_cycle(len(pts), fcs)
            bnd = np.array(cycle if cycle is not None else [], dtype=np.int64)
        else:
            bnd = np.array(boundary, dtype=np.int64).reshape(-1)
        if kind is None:
            kind = "orthogonal" if len(fcs) and _all_orthogonal(pts, fcs) else "general"
        if kind not in KINDS:
            raise ValueError(f"unknown lattice kind {kind!r}")
        return cls(pts, fcs, bnd, color.astype(np.int8), kind)

    # basic geometry -----------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, QuadLattice):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.faces, other.faces)
            and np.array_equal(self.boundary, other.boundary)
            and np.array_equal(self.color, other.color)
        )

    __hash__ = None

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def z(self):
        """Vertices as complex numbers."""
        if "z" not in self._cache:
            z = self.points[:, 0] + 1j * self.points[:, 1]
            z.setflags(write=False)
            self._cache["z"] = z
        return self._cache["z"]

    @property
    def quads(self):
        """Face coordinates, shape (m, 4, 2)."""
        return self.points[self.faces]

    @property
    def areas(self):
        if "areas" not in self._cache:
            self._cache["areas"] = shoelace(self.quads)
        return self._cache["areas"]

    @property
    def edges(self):
        """Undirected lattice edges as a sorted (k, 2) array."""
        if "edges" not in self._cache:
            self._cache["edges"] = _undirected_edges(self.faces)[0]
        return self._cache["edges"]

    @property
    def max_edge(self):
        e = self.edges
        if not len(e):
            return 0.0
        d = self.points[e[:, 0]] - self.points[e[:, 1]]
        return float(np.max(np.hypot(d[:, 0], d[:, 1])))

    @property
    def h(self):
        """Twice the maximal edge length."""
        return 2.0 * self.max_edge

    @property
    def on_boundary(self):
        if "on_boundary" not in self._cache:
            mask = np.zeros(self.n_vertices, dtype=bool)
            mask[self.boundary] = True
            self._cache["on_boundary"] = mask
        return self._cache["on_boundary"]

    @property
    def interior(self):
        """Indices of vertices off the boundary."""
        return np.flatnonzero(~self.on_boundary)

    @property
    def is_orthogonal(self):
        return self.kind in ("square", "orthogonal")

    def lexicographic_first_face(self):
        """Index of the face whose sorted vertex tuple is smallest."""
        keys = np.sort(self.faces, axis=1)
        order = np.lexsort(keys.T[::-1])
        return int(order[0])


# construction helpers ---------------------------------------------------


def _orient_faces(pts, faces):
    if not len(faces):
        return faces
    area = shoelace(pts[faces])
    flip = area < 0
    out = faces.copy()
    # reversal keeps z1 and z3 in place
    out[flip] = out[flip][:, [0, 3, 2, 1]]
    return out


def _undirected_edges(faces):
    directed = np.stack([faces, np.roll(faces, -1, axis=1)], axis=-1).reshape(-1, 2)
    und = np.sort(directed, axis=1)
    base = np.int64(und.max()) + 1 if len(und) else np.int64(1)
    keys, inverse, counts = np.unique(und[:, 0] * base + und[:, 1], return_inverse=True, return_counts=True)
    uniq = np.c_[keys // base, keys % base]
    return uniq, inverse.reshape(-1), counts, directed


def _two_coloring(n, faces):
    """BFS 2-coloring of the edge graph, anchored at B for each component's
    smallest vertex; returns (color, consistent)."""
    color = np.zeros(n, dtype=np.int8)
    if not len(faces):
        return color, True
    edges = _undirected_edges(faces)[0]
    adj = sparse.coo_matrix(
        (np.ones(2 * len(edges)), (np.r_[edges[:, 0], edges[:, 1]], np.r_[edges[:, 1], edges[:, 0]])),
        shape=(n, n),
    ).tocsr()
    ncomp, labels = connected_components(adj, directed=False)
    assigned = np.zeros(n, dtype=bool)
    for comp in range(ncomp):
        root = int(np.flatnonzero(labels == comp)[0])
        order, pred = breadth_first_order(adj, root, directed=False, return_predecessors=True)
        for v in order:
            p = pred[v]
            color[v] = 0 if p < 0 else 1 - color[p]
        assigned[order] = True
    ok = bool(np.all(color[edges[:, 0]] != color[edges[:, 1]]))
    return color, ok


def _rotate_b_first(faces, color):
    out = faces.copy()
    w_first = color[out[:, 0]] == W
    out[w_first] = np.roll(out[w_first], -1, axis=1)
    return out


def _boundary_cycle(n, faces):
    """Boundary as a counterclockwise vertex cycle starting at its smallest
    vertex, or None when the boundary edges do not form one simple cycle."""
    if not len(faces):
        return None
    _, inverse, counts, directed = _undirected_edges(faces)
    bd = directed[counts[inverse] == 1]
    if not len(bd):
        return None
    nxt = {}
    for a, b in bd:
        if a in nxt:
            return None
        nxt[int(a)] = int(b)
    start = min(nxt)
    cycle = [start]
    cur = nxt[start]
    while cur != start:
        if cur not in nxt or len(cycle) > len(nxt):
            return None
        cycle.append(cur)
        cur = nxt[cur]
    if len(cycle) != len(nxt):
        return None
    return cycle


def _all_orthogonal(pts, faces):
    return bool(np.all(diagonal_cosines(pts[faces]) <= ORTHO_TOL))


# builders ---------------------------------------------------------------


def build_square_lattice(domain, step):
    """All axis-aligned square cells of side ``step`` lying in ``domain``.

    The grid is anchored at the disk center or at the lower-left rectangle
    corner. Raises :class:`EmptyLattice` when no closed cell fits.
    """
    if not (step > 0 and math.isfinite(step)):
        raise InvalidStep(f"step must be positive, got {step}")
    if isinstance(domain, Disk):
        ox, oy = domain.cx, domain.cy
        n = int(math.ceil(domain.r / step)) + 1
        irange = jrange = np.arange(-n, n)
    elif isinstance(domain, Rect):
        ox, oy = domain.x0, domain.y0
        irange = np.arange(0, int(math.ceil((domain.x1 - domain.x0) / step)) + 1)
        jrange = np.arange(0, int(math.ceil((domain.y1 - domain.y0) / step)) + 1)
    else:
        raise TypeError(f"unsupported domain {domain!r}")
    I, J = np.meshgrid(irange, jrange)
    I = I.ravel()
    J = J.ravel()
    inside = np.ones(len(I), dtype=bool)
    for di in (0, 1):
        for dj in (0, 1):
            inside &= domain.contains(ox + (I + di) * step, oy + (J + dj) * step)
    I, J = I[inside], J[inside]
    if not len(I):
        raise EmptyLattice(f"no cell of side {step} fits in {domain.describe()}")
    corners = np.stack([np.c_[I, J], np.c_[I + 1, J], np.c_[I + 1, J + 1], np.c_[I, J + 1]], axis=1)
    keys = corners.reshape(-1, 2)
    # vertex numbering: row-major, bottom row first
    lo = keys.min(axis=0)
    width = int(keys[:, 0].max() - lo[0]) + 1
    flat, inv = np.unique((keys[:, 1] - lo[1]) * width + (keys[:, 0] - lo[0]), return_inverse=True)
    ij = np.c_[flat % width + lo[0], flat // width + lo[1]]
    pts = np.c_[ox + ij[:, 0] * step, oy + ij[:, 1] * step]
    faces = inv.reshape(-1, 4)
    return QuadLattice.from_faces(pts, faces, kind="square")


def tikhomirov_lattice(M=2.0):
    """Four-face nonorthogonal lattice on which the maximum principle fails.

    Vertex 0 is the origin; returns ``(lattice, f)`` with ``f`` the discrete
    analytic function whose real part peaks at the interior vertex with
    value ``M`` while the boundary maximum is 1.
    """
    if not M > 1:
        raise ValueError("M must exceed 1")
    ct = 1.0 / math.tan(math.pi / 8)
    far = math.sqrt(2.0) * M
    z = np.array(
        [
            0,
            1j,
            -1j,
            ct,
            -ct,
            far * (ct + 1j),
            -far * (ct + 1j),
            far * (ct - 1j),
            -far * (ct - 1j),
        ]
    )
    f = np.array([M * (1 + 1j), 1, 1, 0, 0, 0, 0, 2j * M, 2j * M], dtype=complex)
    # quadrants: (0, ±cot, far, ±i)
    faces = [
        (0, 3, 5, 1),
        (0, 1, 8, 4),
        (0, 4, 6, 2),
        (0, 2, 7, 3),
    ]
    pts = np.c_[z.real, z.imag]
    return QuadLattice.from_faces(pts, faces), f


# bipartition and validation ----------------------------------------------


def bipartition(L: QuadLattice):
    """Per-vertex colors (``B``=0, ``W``=1) with vertex 0 in B.

    Raises :class:`NotBipartite` if opposite face positions cannot be colored
    consistently.
    """
    color, ok = _two_coloring(L.n_vertices, L.faces)
    if not ok:
        raise NotBipartite("edge graph has an odd cycle")
    return color


@dataclass
class Violation:
    code: str
    message: str
    indices: tuple = ()

    def __str__(self):
        idx = f" {list(self.indices)[:10]}" if self.indices else ""
        return f"{self.code}: {self.message}{idx}"


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self):
        return not self.violations

    def codes(self):
        return {v.code for v in self.violations}


def validate(L: QuadLattice) -> ValidationReport:
    """Check every standing assumption on ``L`` and list what fails."""
    out = []

    def bad(code, message, idx=()):
        out.append(Violation(code, message, tuple(int(i) for i in np.atleast_1d(idx))))

    pts, faces, n = L.points, L.faces, L.n_vertices
    if not len(faces):
        bad("empty", "lattice has no faces")
        return ValidationReport(out)
    if not np.all(np.isfinite(pts)):
        bad("nonfinite", "non-finite coordinates", np.flatnonzero(~np.isfinite(pts).all(axis=1)))
        return ValidationReport(out)

    srt = np.sort(faces, axis=1)
    dup = np.flatnonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))
    if len(dup):
        bad("repeated_vertex", "face vertices are not distinct", dup)
        return ValidationReport(out)

    quads = pts[faces]
    area = shoelace(quads)
    nonpos = np.flatnonzero(~(area > 0))
    if len(nonpos):
        bad("orientation", "face order does not have positive area", nonpos)
    selfx = np.flatnonzero(_self_intersecting(quads))
    if len(selfx):
        bad("not_simple", "quadrilateral is self-intersecting", selfx)
    d13 = np.hypot(*(quads[:, 2] - quads[:, 0]).T)
    d24 = np.hypot(*(quads[:, 3] - quads[:, 1]).T)
    zero_diag = np.flatnonzero((d13 == 0) | (d24 == 0))
    if len(zero_diag):
        bad("degenerate_face", "face has a zero-length diagonal", zero_diag)

    used = np.zeros(n, dtype=bool)
    used[faces.ravel()] = True
    if not used.all():
        bad("isolated_vertex", "vertex belongs to no face", np.flatnonzero(~used))

    edges, inverse, counts, _ = _undirected_edges(faces)
    over = np.flatnonzero(counts > 2)
    if len(over):
        bad("edge_multiplicity", "edge shared by more than two faces", edges[over].ravel())

    _check_face_pairs(faces, n, bad)

    cycle = _boundary_cycle(n, faces)
    if cycle is None:
        bad("boundary_not_cycle", "boundary edges do not form a single simple closed cycle")
    elif not _same_cycle(list(L.boundary), cycle):
        bad("boundary_not_cycle", "boundary not a simple closed cycle matching the faces", L.boundary)
    elif len(nonpos) == 0 and len(selfx) == 0:
        poly = shoelace(pts[np.array(cycle)])
        if not math.isclose(poly, float(area.sum()), rel_tol=1e-9, abs_tol=0.0):
            bad("overlap", f"face areas sum to {area.sum():.6g} but boundary encloses {poly:.6g}")

    color, ok = _two_coloring(n, faces)
    if not ok:
        bad("not_bipartite", "edge graph has an odd cycle")
    else:
        if not np.array_equal(color, L.color):
            bad("coloring", "stored coloring differs from the canonical bipartition")
        wrong = np.flatnonzero(L.color[faces[:, 0]] != B)
        if len(wrong):
            bad("face_order", "z1 is not a B vertex", wrong)
        for name, pair, col in (("B", (0, 2), B), ("W", (1, 3), W)):
            members = np.flatnonzero(color == col)
            if len(members) and _components(n, faces[:, list(pair)], members) > 1:
                bad("disconnected", f"graph {name} is not connected")

    if L.kind in ("square", "orthogonal"):
        cos = diagonal_cosines(quads)
        nonortho = np.flatnonzero(~(cos <= ORTHO_TOL))
        if len(nonortho):
            bad("not_orthogonal", f"lattice tagged {L.kind} has non-orthogonal faces", nonortho)
        if L.kind == "square":
            sides = np.hypot(*(np.roll(quads, -1, axis=1) - quads).transpose(2, 0, 1))
            s = sides.max()
            notsq = np.flatnonzero(~np.isclose(sides, s, rtol=1e-9, atol=0).all(axis=1) | (np.abs(d13 - d24) > 1e-9 * s))
            if len(notsq):
                bad("not_square", "lattice tagged square has non-square faces", notsq)
    return ValidationReport(out)


def _self_intersecting(quads):
    def orient(a, b, c):
        return np.sign((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def crosses(p, q, r, s):
        o1, o2 = orient(p, q, r), orient(p, q, s)
        o3, o4 = orient(r, s, p), orient(r, s, q)
        return (o1 * o2 <= 0) & (o3 * o4 <= 0)

    a, b, c, d = (quads[:, k] for k in range(4))
    return crosses(a, b, c, d) | crosses(b, c, d, a)


def _check_face_pairs(faces, n, bad):
    m = len(faces)
    inc = sparse.csr_matrix((np.ones(4 * m), (np.repeat(np.arange(m), 4), faces.ravel())), shape=(m, n))
    shared = (inc @ inc.T).tocoo()
    sel = (shared.row < shared.col) & (shared.data >= 2)
    rows, cols, cnt = shared.row[sel], shared.col[sel], shared.data[sel]
    many = cnt >= 3
    if np.any(many):
        bad(
            "face_intersection",
            "faces intersect in more than one edge",
            np.c_[rows[many], cols[many]].ravel(),
        )
    for f, g in zip(rows[~many], cols[~many]):
        common = set(faces[f]) & set(faces[g])
        if not (_is_edge(faces[f], common) and _is_edge(faces[g], common)):
            bad("face_intersection", "faces share two vertices that are not a common edge", (f, g))


def _is_edge(face, pair):
    pos = sorted(list(face).index(v) for v in pair)
    return pos[1] - pos[0] in (1, 3)


def _same_cycle(stored, cycle):
    if len(stored) != len(cycle) or len(set(stored)) != len(stored):
        return False
    if not stored:
        return False
    try:
        k = cycle.index(stored[0])
    except ValueError:
        return False
    return stored == cycle[k:] + cycle[:k]


def _components(n, pairs, members):
    g = sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)).tocsr()
    g = g[members][:, members]
    return connected_components(g, directed=False)[0]


def require_valid(L: QuadLattice):
    report = validate(L)
    if not report.ok:
        raise ValidationError(report)
    return L


# eccentricity -----------------------------------------------------------


@dataclass(frozen=True)
class EccentricityReport:
    max_diag_ratio: float
    min_diag_angle: float
    max_disk_count: int

    @property
    def e(self):
        return max(self.max_diag_ratio, 1.0 / self.min_diag_angle, float(self.max_disk_count))


def eccentricity(L: QuadLattice) -> EccentricityReport:
    """Diagonal ratio/angle bounds and the vertex-density bound.

    Vertex counts use closed disks of radius equal to the maximal edge length,
    probed at every vertex and on a grid of pitch h/4.
    """
    quads = L.quads
    d13 = quads[:, 2] - quads[:, 0]
    d24 = quads[:, 3] - quads[:, 1]
    n13 = np.hypot(d13[:, 0], d13[:, 1])
    n24 = np.hypot(d24[:, 0], d24[:, 1])
    if np.any(n13 == 0) or np.any(n24 == 0):
        raise DegenerateFace("face with a zero-length diagonal")
    ratio = np.maximum(n13, n24) / np.minimum(n13, n24)
    cos = np.clip(np.abs(np.einsum("ij,ij->i", d13, d24)) / (n13 * n24), 0.0, 1.0)
    cross = np.abs(d13[:, 0] * d24[:, 1] - d13[:, 1] * d24[:, 0]) / (n13 * n24)
    angle = np.arctan2(cross, cos)
    # exact squares: cos == 0 gives pi/2 exactly
    angle = np.where(cos == 0, math.pi / 2, angle)

    radius = L.max_edge
    tree = cKDTree(L.points)
    pitch = L.h / 4
    lo = L.points.min(axis=0)
    hi = L.points.max(axis=0)
    gx = np.arange(lo[0], hi[0] + pitch / 2, pitch)
    gy = np.arange(lo[1], hi[1] + pitch / 2, pitch)
    grid = np.stack(np.meshgrid(gx, gy), axis=-1).reshape(-1, 2)
    probes = np.vstack([L.points, grid])
    counts = tree.query_ball_point(probes, r=radius * (1 + 1e-12), return_length=True)
    return EccentricityReport(float(ratio.max()), float(angle.min()), int(counts.max()))


# boundary arcs ----------------------------------------------------------


def boundary_arcs(L: QuadLattice, start: int, stop: int):
    """Boundary sub-path from ``start`` to ``stop`` along the stored cycle,
    endpoints included."""
    cyc = [int(v) for v in L.boundary]
    pos = {v: k for k, v in enumerate(cyc)}
    for v in (start, stop):
        if v not in pos:
            raise NotOnBoundary(f"vertex {v} is not on the boundary")
    i, j = pos[start], pos[stop]
    if j >= i:
        return cyc[i : j + 1]
    return cyc[i:] + cyc[: j + 1]


# file I/O ---------------------------------------------------------------


def _num(x):
    return repr(float(x))


def save(L: QuadLattice, path):
    pts = ",".join(f"[{_num(x)},{_num(y)}]" for x, y in L.points)
    faces = ",".join("[" + ",".join(str(int(v)) for v in f) + "]" for f in L.faces)
    bnd = ",".join(str(int(v)) for v in L.boundary)
    text = (
        '{"version":1,\n'
        f'"points":[{pts}],\n'
        f'"faces":[{faces}],\n'
        f'"boundary":[{bnd}],\n'
        f'"kind":"{L.kind}"}}\n'
    )
    Path(path).write_text(text, encoding="utf-8")


def loads(text: str, check: bool = True) -> QuadLattice:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("version") != 1:
        raise ParseError(f"unsupported version {doc.get('version')!r}", field="version")
    for key in ("points", "faces"):
        if not isinstance(doc.get(key), list):
            raise ParseError("missing or not a list", field=key)
    points = doc["points"]
    for k, p in enumerate(points):
        if not (isinstance(p, list) and len(p) == 2 and all(_is_number(c) for c in p)):
            raise ParseError("point must be [x, y]", field=f"points[{k}]")
    n = len(points)
    for k, f in enumerate(doc["faces"]):
        if not isinstance(f, list):
            raise ParseError("face must be a list", field=f"faces[{k}]")
        if len(f) != 4:
            raise ParseError(f"face arity {len(f)}, expected 4", field=f"faces[{k}]")
        if not all(isinstance(v, int) and not isinstance(v, bool) and 0 <= v < n for v in f):
            raise ParseError("face index out of range", field=f"faces[{k}]")
    boundary = doc.get("boundary")
    if boundary is not None:
        if not isinstance(boundary, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) and 0 <= v < n for v in boundary
        ):
            raise ParseError("boundary must list vertex indices", field="boundary")
    kind = doc.get("kind", "general")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}", field="kind")
    L = QuadLattice.from_faces(
        np.array(points, dtype=float).reshape(-1, 2),
        np.array(doc["faces"], dtype=np.int64).reshape(-1, 4),
        boundary=boundary,
        kind=kind,
    )
    return require_valid(L) if check else L


def load(path, check: bool = True) -> QuadLattice:
    return loads(Path(path).read_text(encoding="utf-8"), check)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)
