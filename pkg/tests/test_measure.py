import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dca import _pykernels
from dca.domains import Rect
from dca.errors import NotAnArc, NotOrthogonal, WalkCapExceeded
from dca.lattice import B, build_square_lattice
from dca.measure import WalkConfig, harmonic_measure_exact, random_walk_measure, walk_graph


def side_arcs(L):
    """Four half-open sides of a rectangular lattice, each starting at a corner."""
    cyc = [int(v) for v in L.boundary]
    lo, hi = L.points.min(axis=0), L.points.max(axis=0)
    corner = [k for k, v in enumerate(cyc) if L.points[v][0] in (lo[0], hi[0]) and L.points[v][1] in (lo[1], hi[1])]
    m = len(cyc)
    return [[cyc[(a + s) % m] for s in range((b - a) % m)] for a, b in zip(corner, corner[1:] + corner[:1])]


def center_vertex(L):
    c = L.points.mean(axis=0)
    return int(np.argmin(np.hypot(*(L.points - c).T)))


@pytest.fixture
def sq8():
    return build_square_lattice(Rect(-1, -1, 1, 1), 0.25)


def test_exact_full_and_empty(sq8):
    assert np.abs(harmonic_measure_exact(sq8, sq8.boundary) - 1).max() < 1e-12
    assert np.abs(harmonic_measure_exact(sq8, [])).max() < 1e-15


def test_exact_side_quarter(sq8):
    arcs = side_arcs(sq8)
    assert len(arcs) == 4
    c = center_vertex(sq8)
    vals = [harmonic_measure_exact(sq8, a)[c] for a in arcs]
    assert vals == pytest.approx([0.25] * 4, abs=1e-10)


def test_exact_errors(sq8, tikhomirov):
    cyc = [int(v) for v in sq8.boundary]
    with pytest.raises(NotAnArc):
        harmonic_measure_exact(sq8, [cyc[0], cyc[2]])
    with pytest.raises(NotAnArc):
        harmonic_measure_exact(sq8, [int(sq8.interior[0])])
    L = tikhomirov[0]
    with pytest.raises(NotOrthogonal):
        harmonic_measure_exact(L, L.boundary[:2])


def test_walk_graph_rows(sq8):
    for g in ("B", "W"):
        indptr, indices, cum = walk_graph(sq8, g)
        last = cum[indptr[1:][np.diff(indptr) > 0] - 1]
        assert np.all(last == 1.0)
        assert np.all(np.diff(cum[indptr[0] : indptr[1]]) > 0)


def test_walk_full_boundary(sq8):
    c = center_vertex(sq8)
    est = random_walk_measure(sq8, sq8.boundary, c, WalkConfig(500, seed=3))
    assert est.p_hat == 1.0 and est.stderr == 0.0


def test_walk_small_lattice():
    L = build_square_lattice(Rect(0, 0, 2, 2), 1.0)
    c = center_vertex(L)
    assert L.color[c] == B
    for arc in side_arcs(L):
        est = random_walk_measure(L, arc, c, WalkConfig(4000, seed=11))
        assert abs(est.p_hat - 0.25) <= 3 * est.stderr


def test_walk_repeatable_and_seeded(sq8):
    c = center_vertex(sq8)
    arc = side_arcs(sq8)[0]
    a = random_walk_measure(sq8, arc, c, WalkConfig(3000, seed=9))
    b = random_walk_measure(sq8, arc, c, WalkConfig(3000, seed=9))
    assert a == b
    others = {random_walk_measure(sq8, arc, c, WalkConfig(3000, seed=s)).p_hat for s in range(4)}
    assert len(others) > 1
    assert set(a.to_json()) == {"p_hat", "stderr", "n_absorbed", "seed"}


def test_walk_backends_agree(sq8):
    c = center_vertex(sq8)
    arc = side_arcs(sq8)[1]
    cfg = WalkConfig(2000, seed=5)
    assert random_walk_measure(sq8, arc, c, cfg) == random_walk_measure(sq8, arc, c, cfg, impl=_pykernels)


def test_walk_w_graph(sq8):
    w = [v for v in sq8.interior if sq8.color[v] == 1]
    start = int(w[len(w) // 2])
    exact = harmonic_measure_exact(sq8, side_arcs(sq8)[2])[start]
    est = random_walk_measure(sq8, side_arcs(sq8)[2], start, WalkConfig(20000, seed=1), graph="W")
    assert abs(est.p_hat - exact) <= 4 * est.stderr


def test_walk_errors(sq8):
    c = center_vertex(sq8)
    with pytest.raises(ValueError):
        random_walk_measure(sq8, [], c, WalkConfig(10), graph="W")
    with pytest.raises(ValueError):
        random_walk_measure(sq8, [], c, WalkConfig(10, max_steps=3))
    with pytest.raises(ValueError):
        WalkConfig(0)
    with pytest.raises(ValueError):
        WalkConfig(10, seed=-1)


def test_capped_walks(sq8, monkeypatch):
    from dca import measure

    c = center_vertex(sq8)
    monkeypatch.setattr(measure.kernels, "run_walks", lambda *a, **k: np.array([1, -1, 0, -1], dtype=np.int8))
    est = random_walk_measure(sq8, [], c, WalkConfig(4))
    assert (est.n_walks, est.n_capped, est.p_hat) == (2, 2, 0.5)
    monkeypatch.setattr(measure.kernels, "run_walks", lambda *a, **k: np.full(4, -1, dtype=np.int8))
    with pytest.raises(WalkCapExceeded):
        random_walk_measure(sq8, [], c, WalkConfig(4))


@settings(max_examples=15, deadline=None)
@given(cut=st.integers(1, 31), start=st.integers(0, 31))
def test_measure_additive(cut, start):
    L = build_square_lattice(Rect(-1, -1, 1, 1), 0.25)
    cyc = [int(v) for v in L.boundary]
    m = len(cyc)
    arc = [cyc[(start + s) % m] for s in range(m // 2 + 1)]
    k = min(cut, len(arc) - 1)
    whole = harmonic_measure_exact(L, arc)
    parts = harmonic_measure_exact(L, arc[:k]) + harmonic_measure_exact(L, arc[k:])
    assert np.abs(whole - parts).max() < 1e-12
    rest = [cyc[(start + s) % m] for s in range(len(arc), m)]
    total = whole + harmonic_measure_exact(L, rest)
    assert np.abs(total - 1).max() < 1e-12
