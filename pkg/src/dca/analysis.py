"""Identity residuals, approximation diagnostics and convergence studies.

Continuous quantities (``E_Omega(g)``, the box integral of ``Laplacian g``)
come from adaptive quadrature. When no derivative is supplied for ``g``,
fourth-order central differences are used instead.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields

import numpy as np
from scipy import integrate

from .domains import Disk, Rect
from .errors import BoxOutsideLattice, DCAError, MarginTooSmall, NotAnalytic, NotOrthogonal
from .fem import build_kite_lattice, disk_mesh
from .lattice import B, QuadLattice, build_square_lattice, eccentricity
from .operators import analytic_residual, assemble, bw_coupling, energy, laplacian, laplacian_rotated, scale
from .solver import DirichletProblem, conjugate, solve_dirichlet

log = logging.getLogger(__name__)

QUAD_TOL = 1e-12
ANALYTIC_TOL = 1e-8


def threads() -> int:
    """Worker cap from ``DCA_THREADS`` (default: CPU count)."""
    raw = os.environ.get("DCA_THREADS", "")
    try:
        n = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ValueError(f"DCA_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


# identities -------------------------------------------------------------


def max_principle_report(L: QuadLattice, u):
    """``(max over all vertices, max over boundary vertices, ratio)``."""
    u = np.asarray(u, dtype=float)
    top = float(u.max())
    bnd = float(u[np.asarray(L.boundary)].max())
    if bnd == 0:
        ratio = 1.0 if top == 0 else math.inf
    else:
        ratio = top / bnd
    return top, bnd, ratio


def green_residual(L: QuadLattice, u, v) -> float:
    """``|sum over B of (u Lap v - v Lap u)|``."""
    if not L.is_orthogonal:
        raise NotOrthogonal("Green's identity needs an orthogonal lattice")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    system = assemble(L)
    b = L.color == B
    lu = laplacian(L, u, system)
    lv = laplacian(L, v, system)
    return float(abs(np.sum(u[b] * lv[b]) - np.sum(v[b] * lu[b])))


def boundary_flux(L: QuadLattice, f) -> float:
    """``Im sum f(z3) (conj f(z2) - conj f(z4)) / 2`` over boundary B vertices,
    with ``z2`` and ``z4`` the neighbours before and after ``z3`` on the
    counterclockwise boundary cycle."""
    f = np.asarray(f, dtype=complex)
    cyc = np.asarray(L.boundary)
    prev = np.roll(cyc, 1)
    nxt = np.roll(cyc, -1)
    mask = L.color[cyc] == B
    z3, z2, z4 = cyc[mask], prev[mask], nxt[mask]
    return float(np.imag(np.sum(f[z3] * (np.conj(f[z2]) - np.conj(f[z4])))) / 2)


def energy_conservation_residual(L: QuadLattice, f, tol: float = ANALYTIC_TOL) -> float:
    """``|E(Re f) - boundary_flux(f)|`` for a discrete analytic ``f``."""
    f = np.asarray(f, dtype=complex)
    res = analytic_residual(L, f)
    if res * L.max_edge > tol * scale(f):
        raise NotAnalytic(f"analytic residual {res:.3e} too large")
    return abs(energy(L, f.real) - boundary_flux(L, f))


@dataclass(frozen=True)
class Square:
    """Closed axis-parallel square with center ``(cx, cy)`` and side ``side``."""

    cx: float
    cy: float
    side: float

    @property
    def bounds(self):
        s = self.side / 2
        return self.cx - s, self.cy - s, self.cx + s, self.cy + s

    def contains(self, x, y, tol=1e-9):
        x0, y0, x1, y1 = self.bounds
        e = tol * self.side
        return (x >= x0 - e) & (x <= x1 + e) & (y >= y0 - e) & (y <= y1 + e)


def _inside_polygon(poly, x, y):
    """Even-odd test, vectorized over query points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    inside = np.zeros(x.shape, dtype=bool)
    px, py = poly[:, 0], poly[:, 1]
    qx, qy = np.roll(px, -1), np.roll(py, -1)
    for ax, ay, bx, by in zip(px, py, qx, qy):
        cond = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = ax + (y - ay) * (bx - ax) / (by - ay)
        inside ^= cond & (x < xc)
    return inside


def _diff(g, x, y, axis, d):
    """Fourth-order central difference of ``g`` along ``axis``."""
    e = (d, 0.0) if axis == 0 else (0.0, d)

    def at(k):
        return np.asarray(g(x + k * e[0], y + k * e[1]), dtype=float)

    return (8 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12 * d)


def box_integral(g, R: Square, lap=None) -> float:
    """``integral over R of Laplacian g``.

    With ``lap`` the Laplacian is integrated directly; otherwise the normal
    derivative is integrated around the boundary of ``R``.
    """
    x0, y0, x1, y1 = R.bounds
    opts = dict(epsabs=QUAD_TOL, epsrel=QUAD_TOL)
    if lap is not None:
        return integrate.dblquad(lambda y, x: float(lap(x, y)), x0, x1, y0, y1, **opts)[0]
    d = 1e-3 * R.side
    q = lambda fn, a, b: integrate.quad(fn, a, b, limit=200, **opts)[0]  # noqa: E731
    right = q(lambda t: float(_diff(g, x1, t, 0, d)), y0, y1)
    left = q(lambda t: float(_diff(g, x0, t, 0, d)), y0, y1)
    top = q(lambda t: float(_diff(g, t, y1, 1, d)), x0, x1)
    bottom = q(lambda t: float(_diff(g, t, y0, 1, d)), x0, x1)
    return right - left + top - bottom


def laplacian_box_residual(L: QuadLattice, g, R: Square, lap=None) -> float:
    """``|sum over B vertices in R of Lap_Q g - integral over R of Lap g|``.

    ``g(x, y)`` must be vectorized; ``lap`` is its exact Laplacian if known.
    """
    if not R.side > L.h:
        raise ValueError(f"box side {R.side} must exceed h = {L.h}")
    x0, y0, x1, y1 = R.bounds
    poly = L.points[np.asarray(L.boundary)]
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    strictly = Square(R.cx, R.cy, R.side * (1 + 1e-9))
    if not _inside_polygon(poly, corners[:, 0], corners[:, 1]).all() or strictly.contains(
        poly[:, 0], poly[:, 1], tol=0.0
    ).any():
        raise BoxOutsideLattice("box is not inside the lattice boundary")
    vals = np.asarray(g(L.points[:, 0], L.points[:, 1]), dtype=float)
    vals = np.broadcast_to(vals, (L.n_vertices,))
    lap_q = laplacian(L, vals)
    sel = (L.color == B) & R.contains(L.points[:, 0], L.points[:, 1])
    return abs(float(np.sum(lap_q[sel])) - box_integral(g, R, lap))


# studies ----------------------------------------------------------------


@dataclass(frozen=True)
class StudyRecord:
    h: float
    eccentricity: float
    max_error: float
    energy: float
    solve_seconds: float


def domain_energy(domain, g, grad=None) -> float:
    """``E_Omega(g) = integral of |grad g|^2`` by adaptive quadrature."""
    if grad is None:
        d = 1e-4

        def grad(x, y):
            return _diff(g, x, y, 0, d), _diff(g, x, y, 1, d)

    def dens(x, y):
        gx, gy = grad(x, y)
        return float(gx) ** 2 + float(gy) ** 2

    opts = dict(epsabs=QUAD_TOL, epsrel=QUAD_TOL)
    if isinstance(domain, Disk):
        cx, cy, r = domain.cx, domain.cy, domain.r
        fn = lambda rho, th: dens(cx + rho * math.cos(th), cy + rho * math.sin(th)) * rho  # noqa: E731
        return integrate.dblquad(fn, 0.0, 2 * math.pi, 0.0, r, **opts)[0]
    if isinstance(domain, Rect):
        return integrate.dblquad(lambda y, x: dens(x, y), domain.x0, domain.x1, domain.y0, domain.y1, **opts)[0]
    raise TypeError(f"unsupported domain {domain!r}")


def _levels(fn, lattices, workers):
    workers = min(workers or threads(), max(1, len(lattices)))
    if workers == 1:
        return [fn(L) for L in lattices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, lattices))


def energy_convergence_study(domain, g, lattices, grad=None, workers=None):
    """Discrete energies of the restrictions of ``g`` against ``E_Omega(g)``.

    Returns ``(records, E_Omega)``; ``max_error`` holds ``|E_Q - E_Omega|``.
    """
    target = domain_energy(domain, g, grad)

    def level(L):
        t = time.perf_counter()
        vals = np.broadcast_to(np.asarray(g(L.points[:, 0], L.points[:, 1]), dtype=float), (L.n_vertices,))
        e = energy(L, vals)
        dt = time.perf_counter() - t
        return StudyRecord(L.h, eccentricity(L).e, abs(e - target), e, dt)

    return _levels(level, list(lattices), workers), target


def dirichlet_convergence_study(domain, g, lattices, exact_u, tol=1e-12, workers=None):
    """Max error of the discrete Dirichlet solution on vertices in the closed domain."""

    def level(L):
        t = time.perf_counter()
        rep = solve_dirichlet(DirichletProblem.from_function(L, g), tol=tol)
        dt = time.perf_counter() - t
        x, y = L.points[:, 0], L.points[:, 1]
        keep = domain.contains(x, y)
        ex = np.broadcast_to(np.asarray(exact_u(x, y), dtype=float), (L.n_vertices,))
        err = float(np.max(np.abs(rep.solution[keep] - ex[keep]))) if keep.any() else 0.0
        return StudyRecord(L.h, eccentricity(L).e, err, rep.energy, dt)

    return _levels(level, list(lattices), workers)


def strictly_decreasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


def square_sequence(domain, hs):
    """Square lattices with ``L.h`` equal to each target (grid step ``h / 2``)."""
    return [build_square_lattice(domain, h / 2) for h in hs]


def kite_lattice_for_h(domain: Disk, h: float, seed: int = 0):
    """Kite lattice of a seeded Delaunay mesh of ``domain`` with ``L.h <= h``."""
    spacing = h / 1.7
    for _ in range(20):
        Q = build_kite_lattice(disk_mesh(spacing, seed=seed, radius=domain.r, center=domain.center))
        if Q.h <= h:
            return Q
        spacing *= 0.95
    raise RuntimeError(f"could not reach h <= {h}")


def kite_sequence(domain: Disk, hs, seed=0):
    return [kite_lattice_for_h(domain, h, seed + k) for k, h in enumerate(hs)]


def write_study_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level"] + [f.name for f in fields(StudyRecord)])
        for k, rec in enumerate(records):
            w.writerow([k] + [format(v, ".17g") for v in astuple(rec)])


# diagnostics ------------------------------------------------------------


def friedrichs_ratio(L: QuadLattice, domain, r: float, u) -> float:
    """``h^2 L2_strip(u) / (h r L2_boundary(u) + r^2 E(u))``.

    The strip is the set of B vertices of the domain within distance ``r``
    of its boundary; sums are over B vertices.
    """
    u = np.asarray(u, dtype=float)
    h = L.h
    x, y = L.points[:, 0], L.points[:, 1]
    bnd = np.asarray(L.boundary)
    gap = float(np.max(domain.boundary_distance(x[bnd], y[bnd])))
    if not (r > h and r > gap):
        raise MarginTooSmall(f"margin {r} must exceed h = {h:.4g} and boundary gap {gap:.4g}")
    b = L.color == B
    strip = b & domain.contains(x, y) & (domain.boundary_distance(x, y) < r)
    num = h**2 * float(np.sum(u[strip] ** 2))
    bb = bnd[b[bnd]]
    den = h * r * float(np.sum(u[bb] ** 2)) + r**2 * energy(L, u)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def continuity_modulus(L: QuadLattice, u, pairs):
    """``(|z - w|, |u(z) - u(w)|)`` for each vertex pair."""
    u = np.asarray(u, dtype=float)
    out = []
    for a, b in pairs:
        d = L.points[a] - L.points[b]
        out.append((float(math.hypot(d[0], d[1])), float(abs(u[a] - u[b]))))
    return out


# identity suite ---------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""

    def line(self):
        status = "PASS" if self.passed else ("SKIP" if self.note else "FAIL")
        extra = f"  {self.note}" if self.note else ""
        return f"{self.name:<22} {self.value:>12.3e} {self.threshold:>12.3e}  {status}{extra}"


def identity_suite(L: QuadLattice, g=None, seed: int = 0, tol: float = 1e-12):
    """Residuals of the exact identities on ``L``.

    ``u`` is the discrete harmonic function with boundary data ``g``
    (default ``x^2 - y^2``) and ``w`` a seeded random vertex function.
    Orthogonal-only checks are skipped on other lattices.
    """
    g = g or (lambda x, y: x * x - y * y)
    rng = np.random.default_rng(seed)
    system = assemble(L)
    u = solve_dirichlet(DirichletProblem.from_function(L, g), tol=tol, system=system).solution
    w = rng.standard_normal(L.n_vertices)
    out = []

    def add(name, value, threshold):
        out.append(CheckResult(name, float(value), float(threshold), bool(value <= threshold)))

    def skip(name, why):
        out.append(CheckResult(name, math.nan, math.nan, False, why))

    for name, vec in (("energy_quadratic_u", u), ("energy_quadratic_w", w)):
        e = energy(L, vec)
        add(name, abs(e - 0.5 * vec @ (system.matrix @ vec)), 1e-10 * max(e, 1e-300))
    lap = laplacian(L, w, system)
    add("laplacian_two_forms", np.max(np.abs(lap - laplacian_rotated(L, w))), 1e-12 * scale(lap))
    try:
        f = u + 1j * conjugate(L, u)
        e = energy(L, u)
        add("energy_conservation", energy_conservation_residual(L, f), 1e-10 * max(e, 1e-300))
    except DCAError as exc:
        skip("energy_conservation", type(exc).__name__)
    if L.is_orthogonal:
        add("green", green_residual(L, u, w), 1e-10 * scale(u) * scale(w))
        _, _, ratio = max_principle_report(L, u)
        add("max_principle", abs(ratio - 1.0), 1e-12)
        add("bw_coupling", bw_coupling(L, system), 1e-12 * scale(system.matrix.data))
    else:
        for name in ("green", "max_principle", "bw_coupling"):
            skip(name, "not orthogonal")
    return out
