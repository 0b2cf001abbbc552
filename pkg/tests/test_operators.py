import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dca import operators as op
from dca.domains import Rect
from dca.errors import DegenerateDiagonal, SingularFace
from dca.fem import build_kite_lattice, equilateral_pair
from dca.lattice import QuadLattice, build_square_lattice
from helpers import perturbed

SQ = [0, 1, 1 + 1j, 1j]


def test_face_gradient_examples():
    assert np.allclose(op.face_gradient(SQ, [0, 1, 1, 0]), [1, 0])
    assert np.allclose(op.face_gradient(SQ, [0, 0, 1, 0]), [0.5, 0.5])
    assert np.array_equal(op.face_gradient(SQ, [3, 3, 3, 3]), [0, 0])
    with pytest.raises(SingularFace):
        op.face_gradient(np.array([0, 1, 2, 3], dtype=complex), [0, 1, 2, 3])


def test_energy_examples(unit_square):
    L = build_square_lattice(Rect(0, 0, 3, 2), 1.0)
    assert op.energy(L, L.points[:, 0]) == pytest.approx(L.n_faces)
    assert op.energy(L, np.full(L.n_vertices, 2.5)) == 0.0
    u = np.zeros(4)
    f = unit_square.faces[0]
    u[f[2]] = 1.0
    assert op.energy(unit_square, u) == pytest.approx(0.5)


def test_conductance_examples():
    assert op.conductance(SQ) == pytest.approx(1.0)
    rhombus = [-1, -0.5j, 1, 0.5j]  # z1z3 horizontal length 2, z2z4 length 1
    assert op.conductance(rhombus) == pytest.approx(0.5)
    assert op.conductance(rhombus[1:] + rhombus[:1]) == pytest.approx(2.0)
    Q = build_kite_lattice(equilateral_pair())
    assert Q.n_faces == 1
    assert op.conductances(Q)[0] == pytest.approx(1 / math.sqrt(3), rel=1e-14)
    with pytest.raises(DegenerateDiagonal):
        op.conductance([0, 1, 0, 1j])


def test_assemble_single_square(unit_square):
    M = op.assemble(unit_square).matrix.toarray()
    rng = np.random.default_rng(1)
    for u in rng.normal(size=(5, 4)):
        assert 0.5 * u @ M @ u == pytest.approx(op.energy(unit_square, u), rel=1e-13)
    assert np.allclose(M, M.T)
    assert np.abs(M.sum(axis=1)).max() < 1e-14


def test_assemble_properties(disk_lattice):
    S = op.assemble(disk_lattice)
    M = S.matrix
    assert abs(M - M.T).max() == 0
    assert np.abs(np.asarray(M.sum(axis=1))).max() < 1e-12
    assert op.bw_coupling(disk_lattice, S) <= 1e-13 * abs(M).max()


def test_laplacian_examples(disk_lattice):
    L = disk_lattice
    x, y = L.points.T
    inner = L.interior
    assert np.abs(op.laplacian(L, x)[inner]).max() < 1e-13
    assert np.abs(op.laplacian(L, x * x - y * y)[inner]).max() < 1e-12
    assert np.abs(op.laplacian(L, np.ones(L.n_vertices))).max() < 1e-13


def test_analytic_residual_examples(disk_lattice, tikhomirov):
    L = disk_lattice
    assert op.analytic_residual(L, L.z) < 1e-13
    assert op.analytic_residual(L, L.z**2) < 1e-12
    T, f = tikhomirov
    assert op.analytic_residual(T, f) < 1e-12 * op.scale(f)
    assert op.analytic_residual(L, np.abs(L.z) ** 2) > 0.01


def test_scale():
    assert op.scale([0, 0]) == 1.0
    assert op.scale([-3, 2]) == 3.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), amp=st.floats(0.0, 0.3))
def test_form_and_laplacian_on_perturbed(seed, amp):
    L = perturbed(build_square_lattice(Rect(0, 0, 1, 1), 0.25), seed, amp)
    S = op.assemble(L)
    rng = np.random.default_rng(seed)
    for u in rng.normal(size=(4, L.n_vertices)):
        E = op.energy(L, u)
        assert abs(E - 0.5 * u @ (S.matrix @ u)) <= 1e-10 * E
        a = op.laplacian(L, u, S)
        b = op.laplacian_rotated(L, u)
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(a).max())
    A = S.matrix[S.interior][:, S.interior].toarray()
    assert np.linalg.eigvalsh(A).min() > 0


def test_orthogonal_split(disk_lattice, rng):
    Q = build_kite_lattice(__import__("dca").disk_mesh(0.3, seed=2))
    for L in (disk_lattice, Q):
        u = rng.normal(size=L.n_vertices)
        E = op.energy(L, u)
        assert op.orthogonal_energy(L, u) == pytest.approx(E, rel=1e-12)
        assert op.bw_coupling(L) <= 1e-12 * abs(op.assemble(L).matrix).max()


def test_nonorthogonal_couples(tikhomirov):
    assert op.bw_coupling(tikhomirov[0]) > 0.01


def test_function_csv_roundtrip(tmp_path, grid4, rng):
    u = rng.normal(size=grid4.n_vertices)
    f = u + 1j * rng.normal(size=grid4.n_vertices)
    for k, vals in enumerate((u, f)):
        p = tmp_path / f"u{k}.csv"
        op.save_function(grid4, vals, p)
        back = op.load_function(p, grid4.n_vertices)
        assert np.array_equal(back, vals)
