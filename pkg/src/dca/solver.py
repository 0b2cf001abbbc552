"""Dirichlet problem, conjugate functions and network reconstruction."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order

from .errors import (
    InconsistentBoundaryData,
    NotAnalytic,
    NotHarmonic,
    NotOrthogonal,
    SolverDiverged,
)
from .lattice import B, W, QuadLattice
from .operators import StiffnessSystem, analytic_residual, assemble, gradients, scale

log = logging.getLogger(__name__)

DENSE_LIMIT = 500
CONJUGATE_TOL = 1e-8


@dataclass
class DirichletProblem:
    lattice: QuadLattice
    boundary_values: Mapping[int, float]

    def __post_init__(self):
        bnd = {int(v) for v in self.lattice.boundary}
        given = {int(k) for k in self.boundary_values}
        missing = bnd - given
        extra = given - bnd
        if missing or extra:
            raise ValueError(
                f"boundary values must cover exactly the boundary: missing {sorted(missing)[:5]}, "
                f"extra {sorted(extra)[:5]}"
            )

    @classmethod
    def from_function(cls, L: QuadLattice, g: Callable):
        """Boundary data ``g(x, y)`` (vectorized) sampled at boundary vertices."""
        b = np.asarray(L.boundary)
        vals = np.broadcast_to(np.asarray(g(L.points[b, 0], L.points[b, 1]), dtype=float), b.shape)
        return cls(L, dict(zip(b.tolist(), vals.tolist())))

    def boundary_arrays(self):
        b = np.asarray(self.lattice.boundary, dtype=np.int64)
        return b, np.array([self.boundary_values[int(v)] for v in b], dtype=float)


@dataclass
class SolveReport:
    solution: np.ndarray
    residual: float
    iterations: int
    energy: float

    def to_json(self):
        return {"residual": self.residual, "iterations": self.iterations, "energy": self.energy}


def pcg(A, b, x0=None, tol=1e-12, maxiter=None, atol=0.0):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops when ``max|b - A x| <= max(tol * max|b|, atol)``; the recursively
    updated residual is refreshed from scratch before declaring success.
    Returns ``(x, iterations, converged)``.
    """
    n = len(b)
    maxiter = 20 * n if maxiter is None else maxiter
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    dinv = 1.0 / A.diagonal()
    target = max(tol * float(np.max(np.abs(b))) if n else 0.0, atol)
    r = b - A @ x
    it = 0
    while it < maxiter:
        if np.max(np.abs(r)) <= target:
            r = b - A @ x
            if np.max(np.abs(r)) <= target:
                return x, it, True
        z = dinv * r
        p = z.copy()
        rz = r @ z
        while it < maxiter:
            Ap = A @ p
            alpha = rz / (p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            it += 1
            if np.max(np.abs(r)) <= target:
                break
            z = dinv * r
            rz_new = r @ z
            p *= rz_new / rz
            p += z
            rz = rz_new
        # restart from the true residual
        r = b - A @ x
    return x, it, bool(np.max(np.abs(r)) <= target)


def solve_dirichlet(
    problem: DirichletProblem,
    tol: float = 1e-12,
    x0=None,
    system: StiffnessSystem | None = None,
    method: str = "auto",
) -> SolveReport:
    """Unique discrete harmonic function with the given boundary values.

    The interior block of the stiffness matrix is symmetric positive
    definite, so it is solved by conjugate gradients, or densely when there
    are fewer than ``DENSE_LIMIT`` unknowns (``method`` forces either,
    ``"cg"`` or ``"dense"``).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    L = problem.lattice
    system = system or assemble(L)
    bidx, bval = problem.boundary_arrays()
    interior = system.interior
    u = np.zeros(L.n_vertices)
    u[bidx] = bval
    ref = scale(bval)
    iterations = 0
    if len(interior):
        A = system.interior_block()
        rhs = -(system.coupling_block() @ bval) if len(bidx) else np.zeros(len(interior))
        use_dense = method == "dense" or (method == "auto" and len(interior) < DENSE_LIMIT and x0 is None)
        if use_dense:
            c = scipy.linalg.cho_factor(A.toarray())
            u[interior] = scipy.linalg.cho_solve(c, rhs)
        else:
            start = None if x0 is None else np.asarray(x0, dtype=float)[interior]
            xi, iterations, ok = pcg(A, rhs, start, atol=tol * ref, tol=0.0)
            u[interior] = xi
            if not ok:
                res = _interior_residual(system, u)
                raise SolverDiverged(
                    f"conjugate gradients stopped after {iterations} iterations with residual {res:.3e}"
                )
    residual = _interior_residual(system, u)
    if residual > tol * ref:
        log.debug("residual %.3e above tol*scale %.3e, refining", residual, tol * ref)
        u, extra = _refine(system, u, tol * ref)
        iterations += extra
        residual = _interior_residual(system, u)
        if residual > tol * ref:
            raise SolverDiverged(f"residual {residual:.3e} exceeds {tol * ref:.3e}")
    return SolveReport(u, residual, iterations, float(0.5 * u @ (system.matrix @ u)))


def _interior_residual(system, u):
    if not len(system.interior):
        return 0.0
    return float(np.max(np.abs((system.matrix @ u)[system.interior])))


def _refine(system, u, target):
    A = system.interior_block()
    r = -(system.matrix @ u)[system.interior]
    dx, it, _ = pcg(A, r, atol=target / 4, tol=0.0)
    u = u.copy()
    u[system.interior] += dx
    return u, it


# conjugate functions ----------------------------------------------------


def _rotated_increments(L: QuadLattice, u):
    """Increments of the conjugate along B diagonals (z1->z3) and W diagonals (z2->z4)."""
    g = gradients(L, u)
    rot = np.c_[-g[:, 1], g[:, 0]]
    p = L.quads
    inc_b = np.einsum("ij,ij->i", rot, p[:, 2] - p[:, 0])
    inc_w = np.einsum("ij,ij->i", rot, p[:, 3] - p[:, 1])
    return rot, inc_b, inc_w


def _integrate(n, heads, tails, incs, root):
    """Path sums of ``incs`` (value(tail) - value(head)) over a spanning tree
    grown from ``root``; returns values on the reached vertices (NaN elsewhere)."""
    g = sparse.coo_matrix((np.ones(len(heads)), (heads, tails)), shape=(n, n)).tocsr()
    order, pred = breadth_first_order(g, root, directed=False, return_predecessors=True)
    lookup = {}
    for a, b, d in zip(heads.tolist(), tails.tolist(), incs.tolist()):
        lookup[(a, b)] = d
        lookup[(b, a)] = -d
    vals = np.full(n, np.nan)
    vals[root] = 0.0
    for v in order[1:]:
        p = pred[v]
        vals[v] = vals[p] + lookup[(p, v)]
    return vals


def conjugate(L: QuadLattice, u, anchor: int = 0, anchor_value: float = 0.0, tol: float = CONJUGATE_TOL):
    """A function ``v`` with ``grad v = *grad u`` on every face.

    ``v`` is built separately on B and W by summing increments along a
    spanning tree. The component containing ``anchor`` takes
    ``anchor_value`` there; the other component's constant makes ``v``
    agree with one affine function at all four vertices of the
    lexicographically first face.

    Raises :class:`NotHarmonic` when increments around some cycle do not
    sum to zero within ``tol * scale(u)``.
    """
    u = np.asarray(u, dtype=float)
    n = L.n_vertices
    f = L.faces
    rot, inc_b, inc_w = _rotated_increments(L, u)
    v = np.full(n, np.nan)
    parts = {}
    for col, heads, tails, incs in ((B, f[:, 0], f[:, 2], inc_b), (W, f[:, 1], f[:, 3], inc_w)):
        members = np.flatnonzero(L.color == col)
        root = anchor if L.color[anchor] == col else int(members[0])
        vals = _integrate(n, heads, tails, incs, root)
        if np.any(np.isnan(vals[members])):
            raise NotHarmonic(f"graph {'BW'[col]} is not connected")
        v[members] = vals[members]
        parts[col] = members
        # cycle consistency on every edge, including the non-tree ones
        gap = np.abs(v[tails] - v[heads] - incs)
        if len(gap) and gap.max() > tol * scale(u):
            raise NotHarmonic(f"conjugate increments do not close up on {'BW'[col]} (gap {gap.max():.3e})")
    own = L.color[anchor]
    v[parts[own]] += anchor_value - v[anchor]
    # fix the other component on the reference face
    k = L.lexicographic_first_face()
    face = f[k]
    base = face[0] if own == B else face[1]
    other = face[1] if own == B else face[0]
    target = v[base] + rot[k] @ (L.points[other] - L.points[base])
    v[parts[1 - own]] += target - v[other]
    return v


def analytic_completion(L: QuadLattice, u, anchor: int = 0, anchor_value: float = 0.0, tol: float = CONJUGATE_TOL):
    """``u + i v`` with ``v`` from :func:`conjugate`."""
    u = np.asarray(u, dtype=float)
    return u + 1j * conjugate(L, u, anchor, anchor_value, tol)


# alternating-current network --------------------------------------------


@dataclass
class NetworkState:
    """Phasors on the B edges (one per face) and along the boundary.

    ``voltage[k] = f(z1) - f(z3)`` and ``current[k] = i f(z2) - i f(z4)``
    with face ``k`` listed clockwise. Boundary drops and currents follow the
    B and W boundary vertices in stored cycle order: entry ``k`` runs from
    the ``k``-th such vertex to the next.
    """

    f: np.ndarray
    voltage: np.ndarray
    current: np.ndarray
    boundary_b: np.ndarray
    boundary_w: np.ndarray
    boundary_voltage_drops: np.ndarray
    boundary_currents: np.ndarray


def boundary_sequences(L: QuadLattice):
    """B and W vertices of the boundary cycle in stored order."""
    bnd = np.asarray(L.boundary)
    return bnd[L.color[bnd] == B], bnd[L.color[bnd] == W]


def edge_phasors(L: QuadLattice, f):
    f = np.asarray(f, dtype=complex)
    fc = L.faces
    voltage = f[fc[:, 0]] - f[fc[:, 2]]
    current = 1j * f[fc[:, 3]] - 1j * f[fc[:, 1]]
    return voltage, current


def _integrate_cycle(seq, increments, anchor_vertex, anchor_value, label):
    increments = np.asarray(increments, dtype=float)
    if len(increments) != len(seq):
        raise ValueError(f"expected {len(seq)} {label} increments, got {len(increments)}")
    ref = max(scale(increments), abs(anchor_value), 1.0)
    if abs(increments.sum()) > 1e-10 * ref:
        raise InconsistentBoundaryData(f"{label} increments sum to {increments.sum():.3e}, not 0")
    pos = np.flatnonzero(seq == anchor_vertex)
    if not len(pos):
        raise ValueError(f"{label} anchor {anchor_vertex} is not a {label} boundary vertex")
    k0 = int(pos[0])
    m = len(seq)
    vals = np.empty(m)
    vals[k0] = anchor_value
    for step in range(1, m):
        k = (k0 + step) % m
        vals[k] = vals[k - 1] - increments[k - 1]
    return dict(zip(seq.tolist(), vals.tolist()))


def solve_network(L: QuadLattice, b_increments, w_increments, anchors, tol: float = 1e-12) -> NetworkState:
    """Rebuild all phasors from boundary drops and quarter-period currents.

    ``b_increments[k]`` is ``u(b_k) - u(b_{k+1})`` over consecutive B
    boundary vertices (the real voltage drop at time 0) and
    ``w_increments[k]`` is ``u(w_k) - u(w_{k+1})`` over W boundary vertices
    (the boundary current a quarter period later). ``anchors`` gives
    ``((b_vertex, value), (w_vertex, value))``.
    """
    if not L.is_orthogonal:
        raise NotOrthogonal("network reconstruction is restricted to orthogonal lattices")
    seq_b, seq_w = boundary_sequences(L)
    (ab, vb), (aw, vw) = anchors
    values = _integrate_cycle(seq_b, b_increments, ab, vb, "B")
    values.update(_integrate_cycle(seq_w, w_increments, aw, vw, "W"))
    report = solve_dirichlet(DirichletProblem(L, values), tol=tol)
    f = analytic_completion(L, report.solution, anchor=int(ab), anchor_value=0.0)
    voltage, current = edge_phasors(L, f)
    nb, nw = np.roll(seq_b, -1), np.roll(seq_w, -1)
    drops = f[seq_b] - f[nb]
    currents = 1j * f[nw] - 1j * f[seq_w]
    return NetworkState(f, voltage, current, seq_b, seq_w, drops, currents)


def network_energy(L: QuadLattice, f, tol: float = 1e-8) -> float:
    """``Re sum V conj(I) / 2`` over the B edges.

    ``f`` must be discrete analytic: the quotient residual times the
    maximal edge length may not exceed ``tol * scale(f)``.
    """
    f = np.asarray(f, dtype=complex)
    res = analytic_residual(L, f)
    if res * L.max_edge > tol * scale(f):
        raise NotAnalytic(f"analytic residual {res:.3e}")
    voltage, current = edge_phasors(L, f)
    return float(np.real(np.sum(voltage * np.conj(current))) / 2)


__all__ = [
    "DirichletProblem",
    "SolveReport",
    "NetworkState",
    "pcg",
    "solve_dirichlet",
    "conjugate",
    "analytic_completion",
    "solve_network",
    "network_energy",
    "boundary_sequences",
    "edge_phasors",
]
