"""Pure numpy implementations of the hot kernels.

These are the reference for the compiled versions in ``_ckernels.pyx`` and
must produce bit-identical results; both follow the same arithmetic order.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0


def mix64(z):
    """splitmix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_keys(seed, walk_ids):
    """Per-walk stream key: mix64(mix64(seed) xor walk index).

    Hashing the seed first keeps nearby seeds from sharing streams; a raw
    ``seed ^ i`` only permutes walk indices when seeds are small.
    """
    return mix64(mix64(np.uint64(seed)) ^ np.asarray(walk_ids, dtype=np.uint64))


def uniform(keys, counter):
    """The ``counter``-th uniform double in [0, 1) of each stream."""
    with np.errstate(over="ignore"):
        x = mix64(keys + np.uint64(counter + 1) * GOLDEN)
    return (x >> np.uint64(11)).astype(np.float64) * _TWO_M53


def local_stiffness(points, faces):
    """Per-face 4x4 matrices ``K`` with |grad u|^2 * Area = u^T K u / 2.

    Rows and columns follow the stored face order.
    """
    p = points[faces]
    a = p[:, 2, 0] - p[:, 0, 0]
    b = p[:, 2, 1] - p[:, 0, 1]
    c = p[:, 3, 0] - p[:, 1, 0]
    d = p[:, 3, 1] - p[:, 1, 1]
    det = a * d - b * c
    hx = np.stack([-d, b, d, -b], axis=1)
    hy = np.stack([c, -a, -c, a], axis=1)
    return (hx[:, :, None] * hx[:, None, :] + hy[:, :, None] * hy[:, None, :]) / det[:, None, None]


def run_walks(indptr, indices, cum, state, start, seed, n_walks, max_steps):
    """Absorbed random walks from ``start``.

    ``state`` is 0 for transient vertices, 1 for absorbing vertices in the
    target arc, 2 for other absorbing vertices. Returns an int8 array with
    1 (hit arc), 0 (absorbed elsewhere) or -1 (step cap reached).
    """
    outcome = np.full(n_walks, -1, dtype=np.int8)
    s0 = state[start]
    if s0 != 0:
        outcome[:] = 1 if s0 == 1 else 0
        return outcome
    keys = stream_keys(seed, np.arange(n_walks, dtype=np.uint64))
    alive = np.arange(n_walks)
    pos = np.full(n_walks, start, dtype=np.int64)
    deg = np.diff(indptr)
    maxdeg = int(deg.max()) if len(deg) else 0
    for k in range(max_steps):
        if not len(alive):
            break
        u = uniform(keys[alive], k)
        v = pos[alive]
        j = indptr[v].copy()
        last = indptr[v + 1] - 1
        for _ in range(maxdeg - 1):
            j += (j < last) & (u >= cum[j])
        nxt = indices[j]
        pos[alive] = nxt
        st = state[nxt]
        done = st != 0
        outcome[alive[done]] = np.where(st[done] == 1, 1, 0).astype(np.int8)
        alive = alive[~done]
    return outcome


def scatter_csr(n, faces, K):
    """CSR arrays ``(indptr, indices, data)`` of the summed per-face matrices
    (int32 indices, the index type scipy would convert to anyway).

    Duplicates are added left to right in face order, as in the compiled
    version, so both produce identical sums.
    """
    m = len(faces)
    rows = np.repeat(faces, 4, axis=1).ravel()
    cols = np.tile(faces, (1, 4)).ravel()
    vals = K.reshape(-1)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if 16 * m:
        new = np.r_[True, (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])]
    else:
        new = np.zeros(0, dtype=bool)
    first = np.flatnonzero(new)
    group = np.cumsum(new) - 1
    data = vals[first].copy()
    rest = ~new
    np.add.at(data, group[rest], vals[rest])
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows[first] + 1, 1)
    return np.cumsum(indptr).astype(np.int32), cols[first].astype(np.int32), data


def assemble_csr(points, faces, on_boundary):
    """Summed stiffness matrix as CSR arrays; same sums as the compiled kernel."""
    return scatter_csr(len(points), faces, local_stiffness(points, faces))
