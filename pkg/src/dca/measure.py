"""Discrete harmonic measure: exact via the Dirichlet solver, or estimated
with absorbed random walks on one of the diagonal graphs."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import sparse

from . import kernels
from .errors import NotAnArc, NotOrthogonal, WalkCapExceeded
from .lattice import B, W, QuadLattice
from .operators import conductances
from .solver import DirichletProblem, solve_dirichlet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkConfig:
    n_walks: int = 10_000
    seed: int = 0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.n_walks < 1:
            raise ValueError("n_walks must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class MeasureEstimate:
    p_hat: float
    stderr: float
    n_absorbed: int  # walks absorbed on the arc
    n_walks: int  # walks absorbed anywhere (capped walks excluded)
    n_capped: int
    seed: int

    def to_json(self):
        return {"p_hat": self.p_hat, "stderr": self.stderr, "n_absorbed": self.n_absorbed, "seed": self.seed}


def _check_arc(L: QuadLattice, arc):
    arc = [int(v) for v in arc]
    cyc = [int(v) for v in L.boundary]
    if not arc:
        return arc
    pos = {v: k for k, v in enumerate(cyc)}
    if any(v not in pos for v in arc) or len(set(arc)) != len(arc):
        raise NotAnArc("arc vertices must be distinct boundary vertices")
    m = len(cyc)
    k0 = pos[arc[0]]
    if any(pos[v] != (k0 + s) % m for s, v in enumerate(arc)):
        raise NotAnArc("arc is not a contiguous path along the boundary cycle")
    return arc


def harmonic_measure_exact(L: QuadLattice, arc, tol: float = 1e-12):
    """Dirichlet solution with boundary data 1 on ``arc`` and 0 elsewhere."""
    if not L.is_orthogonal:
        raise NotOrthogonal("harmonic measure needs an orthogonal lattice")
    arc = set(_check_arc(L, arc))
    data = {int(v): (1.0 if int(v) in arc else 0.0) for v in L.boundary}
    return solve_dirichlet(DirichletProblem(L, data), tol=tol).solution


def walk_graph(L: QuadLattice, graph: str = "B"):
    """Transition structure ``(indptr, indices, cum)`` of the weighted walk.

    On B the edge ``z1 z3`` of a face has weight ``c``; on W the edge
    ``z2 z4`` has weight ``1 / c``. ``cum`` holds per-row cumulative
    transition probabilities with the last entry of each row set to 1.
    """
    if not L.is_orthogonal:
        raise NotOrthogonal("random walks need positive real weights")
    c = conductances(L).real
    if np.any(~(c > 0)):
        raise NotOrthogonal("non-positive conductance")
    f = L.faces
    if graph == "B":
        a, b, w = f[:, 0], f[:, 2], c
    elif graph == "W":
        a, b, w = f[:, 1], f[:, 3], 1.0 / c
    else:
        raise ValueError("graph must be 'B' or 'W'")
    n = L.n_vertices
    A = sparse.csr_matrix((np.r_[w, w], (np.r_[a, b], np.r_[b, a])), shape=(n, n))
    A.sum_duplicates()
    A.sort_indices()
    indptr = A.indptr.astype(np.int64)
    cum = np.empty(len(A.data))
    for v in range(n):
        lo, hi = indptr[v], indptr[v + 1]
        if hi > lo:
            row = np.cumsum(A.data[lo:hi])
            cum[lo:hi] = row / row[-1]
            cum[hi - 1] = 1.0
    return indptr, A.indices.astype(np.int64), cum


def random_walk_measure(
    L: QuadLattice, arc, start: int, cfg: WalkConfig = WalkConfig(), graph: str = "B", impl=None
) -> MeasureEstimate:
    """Fraction of walks from ``start`` that first reach the boundary on ``arc``.

    Walk ``i`` draws from a counter-based stream keyed by the seed and ``i``,
    so the estimate does not depend on how walks are scheduled.
    """
    arc = set(_check_arc(L, arc))
    col = B if graph == "B" else W
    if L.color[start] != col:
        raise ValueError(f"start vertex {start} is not on graph {graph}")
    if cfg.max_steps < L.n_vertices:
        raise ValueError("max_steps must be at least the vertex count")
    indptr, indices, cum = walk_graph(L, graph)
    state = np.zeros(L.n_vertices, dtype=np.int8)
    bnd = np.asarray(L.boundary)
    state[bnd] = 2
    if arc:
        state[np.fromiter(arc, dtype=np.int64)] = 1
    outcome = kernels.run_walks(indptr, indices, cum, state, start, cfg.seed, cfg.n_walks, cfg.max_steps, impl=impl)
    capped = int(np.count_nonzero(outcome < 0))
    valid = cfg.n_walks - capped
    if capped:
        log.warning("%d of %d walks hit the step cap %d and were discarded", capped, cfg.n_walks, cfg.max_steps)
    if valid == 0:
        raise WalkCapExceeded(f"all {cfg.n_walks} walks exceeded {cfg.max_steps} steps")
    hits = int(np.count_nonzero(outcome == 1))
    p = hits / valid
    return MeasureEstimate(p, math.sqrt(p * (1 - p) / valid), hits, valid, capped, cfg.seed)


__all__ = [
    "WalkConfig",
    "MeasureEstimate",
    "harmonic_measure_exact",
    "random_walk_measure",
    "walk_graph",
    "asdict",
]
