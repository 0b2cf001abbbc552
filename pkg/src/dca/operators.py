"""Face gradients, energy, conductances and the discrete Laplacian.

Vertex functions are plain numpy arrays indexed like ``L.points``; complex
arrays are treated componentwise except in :func:`analytic_residual`.

Faces are stored counterclockwise. Formulas that are naturally written for
a clockwise listing ``(z1, z2, z3, z4)`` are applied to the relisting
``(z1, z4, z3, z2)``, which keeps the B diagonal in place and swaps the W
endpoints.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from . import kernels
from .errors import DegenerateDiagonal, ParseError, SingularFace
from .lattice import B, QuadLattice, shoelace


def _as_xy(p):
    p = np.asarray(p)
    if np.iscomplexobj(p):
        return np.stack([p.real, p.imag], axis=-1).astype(float)
    return p.astype(float)


def face_gradient(coords, values):
    """The vector ``g`` with ``g . (z3 - z1) = u3 - u1`` and ``g . (z4 - z2) = u4 - u2``.

    ``coords`` is a sequence of four points (pairs or complex numbers) and
    ``values`` the four function values.
    """
    p = _as_xy(coords).reshape(4, 2)
    u = np.asarray(values, dtype=float).reshape(4)
    A = np.array([p[2] - p[0], p[3] - p[1]])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if det == 0 or not np.isfinite(det):
        raise SingularFace("face diagonals are parallel")
    return np.linalg.solve(A, [u[2] - u[0], u[3] - u[1]])


def gradients(L: QuadLattice, u):
    """Face gradients for every face, shape (m, 2); ``u`` real."""
    u = np.asarray(u, dtype=float)
    p = L.quads
    a, b = (p[:, 2] - p[:, 0]).T
    c, d = (p[:, 3] - p[:, 1]).T
    det = a * d - b * c
    if np.any(det == 0):
        raise SingularFace(f"faces with parallel diagonals: {np.flatnonzero(det == 0)[:10]}")
    f = L.faces
    d13 = u[f[:, 2]] - u[f[:, 0]]
    d24 = u[f[:, 3]] - u[f[:, 1]]
    return np.c_[(d * d13 - b * d24) / det, (-c * d13 + a * d24) / det]


def energy(L: QuadLattice, u) -> float:
    """Sum over faces of ``|grad u|^2 * Area``."""
    g = gradients(L, u)
    return float(np.sum((g[:, 0] ** 2 + g[:, 1] ** 2) * L.areas))


def conductance(coords) -> complex:
    """``i (z2 - z4) / (z1 - z3)`` for the clockwise listing of a stored face.

    For a counterclockwise face ``(z1, z2, z3, z4)`` this is
    ``i (z4 - z2) / (z1 - z3)``; it has positive real part and is a positive
    real number when the diagonals are orthogonal.
    """
    p = _as_xy(coords).reshape(4, 2)
    z = p[:, 0] + 1j * p[:, 1]
    if z[0] == z[2]:
        raise DegenerateDiagonal("z1 == z3")
    return complex(1j * (z[3] - z[1]) / (z[0] - z[2]))


def conductances(L: QuadLattice):
    """Per-face conductances of the B diagonals (complex)."""
    z = L.z[L.faces]
    d13 = z[:, 0] - z[:, 2]
    if np.any(d13 == 0):
        raise DegenerateDiagonal("face with z1 == z3")
    return 1j * (z[:, 3] - z[:, 1]) / d13


def orthogonal_energy(L: QuadLattice, u) -> float:
    """Split form ``sum (c (u3-u1)^2 + (u4-u2)^2 / c) / 2``; orthogonal lattices only."""
    u = np.asarray(u, dtype=float)
    c = conductances(L).real
    f = L.faces
    return float(np.sum(c * (u[f[:, 2]] - u[f[:, 0]]) ** 2 + (u[f[:, 3]] - u[f[:, 1]]) ** 2 / c) / 2)


@dataclass(frozen=True, eq=False)
class StiffnessSystem:
    """``E(u) = u^T M u / 2`` with the interior/boundary index split."""

    matrix: sparse.csr_matrix
    interior: np.ndarray
    boundary: np.ndarray

    def interior_block(self):
        return self.matrix[self.interior][:, self.interior].tocsr()

    def coupling_block(self):
        return self.matrix[self.interior][:, self.boundary].tocsr()


def assemble(L: QuadLattice) -> StiffnessSystem:
    """Scatter the per-face 4x4 matrices into a sparse matrix over all vertices."""
    if np.any(~(L.areas != 0)):
        raise SingularFace("face with zero area")
    n = L.n_vertices
    indptr, indices, data = kernels.assemble_csr(L.points, L.faces, L.on_boundary)
    M = sparse.csr_matrix((data, indices, indptr), shape=(n, n))
    M.has_sorted_indices = True
    return StiffnessSystem(M, L.interior.copy(), np.asarray(L.boundary, dtype=np.int64).copy())


def laplacian(L: QuadLattice, u, system: StiffnessSystem | None = None):
    """``-M u``, the negative gradient of the energy."""
    system = system or assemble(L)
    u = np.asarray(u)
    if np.iscomplexobj(u):
        return -(system.matrix @ u.real) - 1j * (system.matrix @ u.imag)
    return -(system.matrix @ u)


def laplacian_rotated(L: QuadLattice, u):
    """Laplacian as a sum of rotated face gradients.

    At a vertex ``z`` each incident face is relisted clockwise starting at
    ``z`` and contributes ``*grad u . (z2 - z4)``, where ``*`` is the
    counterclockwise quarter turn.
    """
    u = np.asarray(u, dtype=float)
    g = gradients(L, u)
    rot = np.c_[-g[:, 1], g[:, 0]]
    p = L.quads
    out = np.zeros(L.n_vertices)
    for k in range(4):
        # clockwise from a_k: z2 = a_{k-1}, z4 = a_{k+1}
        vec = p[:, (k - 1) % 4] - p[:, (k + 1) % 4]
        np.add.at(out, L.faces[:, k], np.einsum("ij,ij->i", rot, vec))
    return out


def analytic_residual(L: QuadLattice, f) -> float:
    """Max over faces of the gap between the two diagonal difference quotients."""
    f = np.asarray(f, dtype=complex)
    z = L.z[L.faces]
    d13 = z[:, 0] - z[:, 2]
    d24 = z[:, 1] - z[:, 3]
    if np.any(d13 == 0) or np.any(d24 == 0):
        raise DegenerateDiagonal("face with a zero-length diagonal")
    ff = f[L.faces]
    gap = (ff[:, 0] - ff[:, 2]) / d13 - (ff[:, 1] - ff[:, 3]) / d24
    return float(np.max(np.abs(gap))) if len(gap) else 0.0


def scale(values) -> float:
    """Max absolute value, the reference for relative tolerances (1 for zero data)."""
    values = np.asarray(values)
    s = float(np.max(np.abs(values))) if values.size else 0.0
    return s if s > 0 else 1.0


def bw_coupling(L: QuadLattice, system: StiffnessSystem | None = None) -> float:
    """Largest |entry| of M coupling a B vertex to a W vertex."""
    M = (system or assemble(L)).matrix.tocoo()
    mixed = L.color[M.row] != L.color[M.col]
    return float(np.max(np.abs(M.data[mixed]))) if np.any(mixed) else 0.0


def b_vertices(L: QuadLattice):
    return np.flatnonzero(L.color == B)


# CSV I/O ----------------------------------------------------------------


def save_function(L: QuadLattice, u, path):
    u = np.asarray(u)
    complex_valued = np.iscomplexobj(u)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "x", "y"] + (["value_re", "value_im"] if complex_valued else ["value"]))
        for k, (x, y) in enumerate(L.points):
            vals = [u[k].real, u[k].imag] if complex_valued else [u[k]]
            w.writerow([k, format(x, ".17g"), format(y, ".17g")] + [format(float(v), ".17g") for v in vals])


def load_function(path, n_vertices: int | None = None):
    with open(Path(path), newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", line=1)
    header = [h.strip() for h in rows[0]]
    if header == ["index", "x", "y", "value"]:
        complex_valued = False
    elif header == ["index", "x", "y", "value_re", "value_im"]:
        complex_valued = True
    else:
        raise ParseError(f"unexpected header {header}", line=1)
    vals = []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields", line=ln)
        try:
            idx = int(row[0])
            nums = [float(v) for v in row[3:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=ln) from None
        if idx != ln - 2:
            raise ParseError(f"index {idx} out of order", line=ln, field="index")
        vals.append(complex(nums[0], nums[1]) if complex_valued else nums[0])
    if n_vertices is not None and len(vals) != n_vertices:
        raise ParseError(f"{len(vals)} rows for {n_vertices} vertices")
    return np.array(vals, dtype=complex if complex_valued else float)


__all__ = [
    "face_gradient",
    "gradients",
    "energy",
    "conductance",
    "conductances",
    "orthogonal_energy",
    "StiffnessSystem",
    "assemble",
    "laplacian",
    "laplacian_rotated",
    "analytic_residual",
    "scale",
    "bw_coupling",
    "save_function",
    "load_function",
    "shoelace",
]
