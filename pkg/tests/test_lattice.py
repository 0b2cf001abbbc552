import math

import numpy as np
import pytest

from dca import lattice as lat
from dca.domains import Disk, Rect, parse_domain
from dca.errors import EmptyLattice, InvalidStep, NotOnBoundary, ParseError, ValidationError
from dca.lattice import B, W, QuadLattice, boundary_arcs, build_square_lattice, eccentricity, validate


def test_rectangle_two_cells():
    L = build_square_lattice(Rect(0, 0, 2, 1), 1.0)
    assert (L.n_faces, L.n_vertices, len(L.boundary)) == (2, 6, 6)
    assert L.kind == "square"
    assert L.h == pytest.approx(2.0)


def test_disk_four_cells():
    L = build_square_lattice(Disk(0, 0, 1.5), 1.0)
    assert L.n_faces == 4
    assert L.n_vertices == 9
    assert sorted(map(tuple, L.points[L.interior])) == [(0.0, 0.0)]


def test_empty_and_bad_step():
    with pytest.raises(EmptyLattice):
        build_square_lattice(Rect(0, 0, 0.5, 0.5), 1.0)
    for step in (0.0, -1.0):
        with pytest.raises(InvalidStep):
            build_square_lattice(Rect(0, 0, 1, 1), step)


def test_faces_positive_and_colored(disk_lattice):
    L = disk_lattice
    assert np.all(L.areas > 0)
    assert np.all(L.color[L.faces[:, [0, 2]]] == B)
    assert np.all(L.color[L.faces[:, [1, 3]]] == W)
    assert L.color[0] == B


def test_checkerboard(grid4):
    L = grid4
    ij = np.rint((L.points + 1) / 0.5).astype(int)
    par = (ij.sum(axis=1) + ij[0].sum()) % 2
    assert np.array_equal(par, L.color)


def test_builder_output_validates(disk_lattice, grid4, tikhomirov):
    for L in (disk_lattice, grid4, tikhomirov[0]):
        rep = validate(L)
        assert rep.ok, [str(v) for v in rep.violations]


def test_pinch_violation():
    # two unit squares sharing two edges: the second reuses the first's corner chain
    pts = [(0, 0), (1, 0), (1, 1), (0, 1), (2, 0.5)]
    faces = [(0, 1, 2, 3), (1, 4, 2, 3)]
    L = QuadLattice.from_faces(pts, faces, boundary=[0, 1, 4, 2, 3])
    rep = validate(L)
    assert not rep.ok
    assert "face_intersection" in rep.codes() or "edge_multiplicity" in rep.codes()


def test_boundary_skipping_vertex(unit_square):
    L = unit_square
    bad = QuadLattice.from_faces(L.points, L.faces, boundary=L.boundary[:-1])
    rep = validate(bad)
    assert "boundary_not_cycle" in rep.codes()


def test_tikhomirov_colors(tikhomirov):
    L, _ = tikhomirov
    ct = 1 / math.tan(math.pi / 8)
    z = L.z
    b = set(np.round(z[L.color == B], 9))
    far = math.sqrt(2) * 2 * (ct + 1j)
    want_b = {0, far, -far, far.conjugate(), -far.conjugate()}
    assert b == set(np.round(list(want_b), 9))
    assert set(np.round(z[L.color == W], 9)) == set(np.round([1j, -1j, ct, -ct], 9))
    assert L.kind == "general"


def test_single_face_bipartition(unit_square):
    c = lat.bipartition(unit_square)
    f = unit_square.faces[0]
    assert c[f[0]] == c[f[2]] != c[f[1]] == c[f[3]]


def test_eccentricity_square(grid4):
    e = eccentricity(grid4)
    assert e.max_diag_ratio == 1.0
    assert e.min_diag_angle == math.pi / 2
    assert e.e == max(1.0, 2 / math.pi, e.max_disk_count)


def test_eccentricity_stretched_face():
    L = QuadLattice.from_faces([(0, 0), (1, 0), (1, 3), (0, 1)], [(0, 1, 2, 3)])
    assert eccentricity(L).max_diag_ratio == pytest.approx(math.sqrt(5))


def test_single_square_disk_count(unit_square):
    assert eccentricity(unit_square).max_disk_count == 4


def test_boundary_arcs(grid4):
    L = build_square_lattice(Rect(0, 0, 2, 2), 1.0)
    cyc = [int(v) for v in L.boundary]
    assert len(cyc) == 8
    assert boundary_arcs(L, cyc[3], cyc[3]) == [cyc[3]]
    assert boundary_arcs(L, cyc[2], cyc[1]) == cyc[2:] + cyc[:2]
    corners = [v for v in cyc if np.all(np.isin(L.points[v], [0.0, 2.0]))]
    k = cyc.index(corners[0])
    side = boundary_arcs(L, cyc[k], cyc[(k + 2) % 8])
    assert len(side) == 3 and side[-1] in corners
    with pytest.raises(NotOnBoundary):
        boundary_arcs(L, int(L.interior[0]), cyc[0])


def test_save_load_roundtrip(tmp_path, disk_lattice, tikhomirov):
    for k, L in enumerate((disk_lattice, tikhomirov[0])):
        p = tmp_path / f"l{k}.json"
        lat.save(L, p)
        M = lat.load(p)
        assert M == L
        assert np.array_equal(M.points.view(np.int64), L.points.view(np.int64))


def test_load_errors(tmp_path, unit_square):
    with pytest.raises(ParseError):
        lat.loads("{not json")
    p = tmp_path / "l.json"
    lat.save(unit_square, p)
    text = p.read_text()
    bad = QuadLattice.from_faces(unit_square.points, unit_square.faces, boundary=unit_square.boundary[:-1])
    lat.save(bad, p)
    with pytest.raises(ValidationError):
        lat.load(p)
    assert lat.load(p, check=False) == bad
    assert lat.loads(text) == unit_square


def test_parse_domain():
    assert parse_domain("disk:0,0,1") == Disk(0, 0, 1)
    assert parse_domain("rect:0,0,2,1") == Rect(0, 0, 2, 1)
    with pytest.raises(ValueError):
        parse_domain("ring:1")
