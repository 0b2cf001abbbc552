"""Kernel backend selection.

The compiled extension ``dca._ckernels`` is used when it was built; otherwise
the numpy implementations in ``dca._pykernels`` are used. Setting
``DCA_PURE_PYTHON=1`` forces the fallback. Both backends give bit-identical
results.
"""

import os

import numpy as np

from . import _pykernels as python_kernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("DCA_PURE_PYTHON", "") in ("", "0"):
    backend = compiled_kernels
    BACKEND = "cython"
else:
    backend = python_kernels
    BACKEND = "python"


def local_stiffness(points, faces, impl=None):
    impl = impl or backend
    return impl.local_stiffness(
        np.ascontiguousarray(points, dtype=np.float64), np.ascontiguousarray(faces, dtype=np.int64)
    )


def run_walks(indptr, indices, cum, state, start, seed, n_walks, max_steps, impl=None):
    impl = impl or backend
    return impl.run_walks(
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        np.ascontiguousarray(cum, dtype=np.float64),
        np.ascontiguousarray(state, dtype=np.int8),
        int(start),
        int(seed) & 0xFFFFFFFFFFFFFFFF,
        int(n_walks),
        int(max_steps),
    )


def scatter_csr(n, faces, K, impl=None):
    impl = impl or backend
    return impl.scatter_csr(
        int(n), np.ascontiguousarray(faces, dtype=np.int64), np.ascontiguousarray(K, dtype=np.float64)
    )


def assemble_csr(points, faces, on_boundary, impl=None):
    """CSR arrays ``(indptr, indices, data)`` of the stiffness matrix."""
    impl = impl or backend
    points = np.ascontiguousarray(points, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    out = impl.assemble_csr(points, faces, np.ascontiguousarray(on_boundary, dtype=np.int8))
    if out is None:  # rows of unexpected size: use the general scatter
        out = impl.scatter_csr(len(points), faces, impl.local_stiffness(points, faces))
    return out
