"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 50,100,200] [--walks 20000]

Prints best-of-N wall times per kernel and backend and checks that both
backends return identical arrays.
"""

import argparse
import time

import numpy as np

from dca import _pykernels, kernels
from dca.domains import Rect
from dca.lattice import B, build_square_lattice
from dca.measure import walk_graph

try:
    from dca import _ckernels
except ImportError:
    _ckernels = None


def best(fn, repeat):
    ts = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        ts.append(time.perf_counter() - t)
    return min(ts), out


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="50,100,200", help="grid cells per side")
    ap.add_argument("--walks", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return 1

    print(f"{'kernel':<16} {'faces':>8} {'cython s':>10} {'python s':>10} {'speedup':>8}  equal")
    for n in [int(s) for s in args.sizes.split(",")]:
        L = build_square_lattice(Rect(0, 0, 1, 1), 1.0 / n)
        pts, faces, ob = L.points, L.faces, L.on_boundary
        cases = {
            "local_stiffness": lambda impl: kernels.local_stiffness(pts, faces, impl=impl),
            "assemble_csr": lambda impl: kernels.assemble_csr(pts, faces, ob, impl=impl),
        }
        indptr, indices, cum = walk_graph(L, "B")
        state = np.zeros(L.n_vertices, dtype=np.int8)
        state[L.boundary] = 2
        state[L.boundary[: len(L.boundary) // 4]] = 1
        start = int(np.flatnonzero((L.color == B) & ~L.on_boundary)[len(L.interior) // 4])
        walks = args.walks if n <= 100 else args.walks // 10
        cases["run_walks"] = lambda impl: kernels.run_walks(
            indptr, indices, cum, state, start, 7, walks, 10**8, impl=impl
        )
        for name, fn in cases.items():
            tc, oc = best(lambda: fn(_ckernels), args.repeat)
            tp, op = best(lambda: fn(_pykernels), max(1, args.repeat // 2))
            label = f"{L.n_faces}" if name != "run_walks" else f"{walks}w"
            print(f"{name:<16} {label:>8} {tc:>10.4f} {tp:>10.4f} {tp / tc:>8.1f}  {same(oc, op)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
