# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np

from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def local_stiffness(const double[:, ::1] points, const int64_t[:, ::1] faces):
    cdef Py_ssize_t m = faces.shape[0], f, r, s
    out = np.empty((m, 4, 4), dtype=np.float64)
    cdef double[:, :, ::1] K = out
    cdef double a, b, c, d, det
    cdef double hx[4]
    cdef double hy[4]
    with nogil:
        for f in range(m):
            a = points[faces[f, 2], 0] - points[faces[f, 0], 0]
            b = points[faces[f, 2], 1] - points[faces[f, 0], 1]
            c = points[faces[f, 3], 0] - points[faces[f, 1], 0]
            d = points[faces[f, 3], 1] - points[faces[f, 1], 1]
            det = a * d - b * c
            hx[0] = -d; hx[1] = b; hx[2] = d; hx[3] = -b
            hy[0] = c; hy[1] = -a; hy[2] = -c; hy[3] = a
            for r in range(4):
                for s in range(4):
                    K[f, r, s] = (hx[r] * hx[s] + hy[r] * hy[s]) / det
    return out


def run_walks(const int64_t[::1] indptr, const int64_t[::1] indices, const double[::1] cum,
              const int8_t[::1] state, int64_t start, uint64_t seed, int64_t n_walks,
              int64_t max_steps):
    out = np.full(n_walks, -1, dtype=np.int8)
    cdef int8_t[::1] outcome = out
    cdef int64_t i, k, v, j, last
    cdef uint64_t key
    cdef double u
    cdef int8_t st
    cdef uint64_t hseed = mix64(seed)
    if state[start] != 0:
        out[:] = 1 if state[start] == 1 else 0
        return out
    with nogil:
        for i in range(n_walks):
            key = mix64(hseed ^ <uint64_t>i)
            v = start
            for k in range(max_steps):
                u = <double>(mix64(key + <uint64_t>(k + 1) * GOLDEN) >> 11) * TWO_M53
                j = indptr[v]
                last = indptr[v + 1] - 1
                while j < last and u >= cum[j]:
                    j += 1
                v = indices[j]
                st = state[v]
                if st != 0:
                    outcome[i] = 1 if st == 1 else 0
                    break
    return out


def assemble_csr(const double[:, ::1] points, const int64_t[:, ::1] faces, const int8_t[::1] on_boundary):
    """Summed stiffness matrix in CSR form, rows with sorted columns.

    Row ``v`` of a valid lattice has ``1 + 2 * faces(v) + on_boundary(v)``
    entries; that count sizes the output exactly. Returns ``None`` if a row
    overflows (the caller falls back to the general scatter).
    """
    cdef Py_ssize_t n = points.shape[0], m = faces.shape[0]
    cdef Py_ssize_t f, r, s, v, k, j, lo, end
    cdef int64_t c
    cdef double a, b, cc, d, det, val
    cdef double hx[4]
    cdef double hy[4]
    cdef bint overflow = 0
    indptr_arr = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] indptr = indptr_arr
    for f in range(m):
        for r in range(4):
            indptr[faces[f, r] + 1] += 2
    for v in range(n):
        indptr[v + 1] += 1 + on_boundary[v]
    for v in range(n):
        indptr[v + 1] += indptr[v]
    nnz = indptr[n]
    if n >= 2**31:
        return None
    cols_arr = np.empty(nnz, dtype=np.int32)
    vals_arr = np.empty(nnz, dtype=np.float64)
    fill_arr = indptr_arr[:n].copy()
    cdef int32_t[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef int64_t[::1] fill = fill_arr
    with nogil:
        for f in range(m):
            a = points[faces[f, 2], 0] - points[faces[f, 0], 0]
            b = points[faces[f, 2], 1] - points[faces[f, 0], 1]
            cc = points[faces[f, 3], 0] - points[faces[f, 1], 0]
            d = points[faces[f, 3], 1] - points[faces[f, 1], 1]
            det = a * d - b * cc
            hx[0] = -d; hx[1] = b; hx[2] = d; hx[3] = -b
            hy[0] = cc; hy[1] = -a; hy[2] = -cc; hy[3] = a
            for r in range(4):
                v = faces[f, r]
                lo = indptr[v]
                for s in range(4):
                    c = faces[f, s]
                    val = (hx[r] * hx[s] + hy[r] * hy[s]) / det
                    end = fill[v]
                    k = lo
                    while k < end and cols[k] != c:
                        k += 1
                    if k < end:
                        vals[k] += val
                    elif end < indptr[v + 1]:
                        cols[end] = <int32_t>c
                        vals[end] = val
                        fill[v] = end + 1
                    else:
                        overflow = 1
        if not overflow:
            for v in range(n):
                if fill[v] != indptr[v + 1]:
                    overflow = 1
                    break
                # insertion sort of the (short) row by column
                for k in range(indptr[v] + 1, indptr[v + 1]):
                    c = cols[k]
                    val = vals[k]
                    j = k
                    while j > indptr[v] and cols[j - 1] > c:
                        cols[j] = cols[j - 1]
                        vals[j] = vals[j - 1]
                        j -= 1
                    cols[j] = <int32_t>c
                    vals[j] = val
    if overflow:
        return None
    return indptr_arr.astype(np.int32), cols_arr, vals_arr


def scatter_csr(int64_t n, const int64_t[:, ::1] faces, const double[:, :, ::1] K):
    cdef Py_ssize_t m = faces.shape[0]
    start_arr = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] start = start_arr
    cdef Py_ssize_t f, r, s, v, p, k, j, lo, hi, w, row0
    cdef int64_t c
    cdef double val
    for f in range(m):
        for r in range(4):
            start[faces[f, r] + 1] += 4
    for v in range(n):
        start[v + 1] += start[v]
    cols_arr = np.empty(16 * m, dtype=np.int64)
    vals_arr = np.empty(16 * m, dtype=np.float64)
    pos_arr = start_arr[:n].copy()
    cdef int64_t[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef int64_t[::1] pos = pos_arr
    out_ptr_arr = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] out_ptr = out_ptr_arr
    with nogil:
        for f in range(m):
            for r in range(4):
                v = faces[f, r]
                p = pos[v]
                for s in range(4):
                    cols[p + s] = faces[f, s]
                    vals[p + s] = K[f, r, s]
                pos[v] = p + 4
        w = 0
        for v in range(n):
            lo = start[v]
            hi = start[v + 1]
            # stable insertion sort of the row by column
            for k in range(lo + 1, hi):
                c = cols[k]
                val = vals[k]
                j = k
                while j > lo and cols[j - 1] > c:
                    cols[j] = cols[j - 1]
                    vals[j] = vals[j - 1]
                    j -= 1
                cols[j] = c
                vals[j] = val
            # merge duplicates, compacting in place (w never passes k)
            row0 = w
            for k in range(lo, hi):
                if w > row0 and cols[w - 1] == cols[k]:
                    vals[w - 1] += vals[k]
                else:
                    cols[w] = cols[k]
                    vals[w] = vals[k]
                    w += 1
            out_ptr[v + 1] = w
    return out_ptr_arr.astype(np.int32), cols_arr[:w].astype(np.int32), vals_arr[:w]
