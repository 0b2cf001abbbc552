import numpy as np

from dca.lattice import QuadLattice


def perturbed(L, seed, amp=0.2):
    """Jitter interior vertices by up to ``amp`` times the edge length; faces stay convex."""
    rng = np.random.default_rng(seed)
    pts = L.points.copy()
    inner = L.interior
    pts[inner] += rng.uniform(-amp, amp, size=(len(inner), 2)) * L.max_edge
    return QuadLattice.from_faces(pts, L.faces)


def re_z2(x, y):
    return x * x - y * y


ACCEPTANCE = []


def record(number, name, ok, detail=""):
    """Log one acceptance line; the terminal summary prints them in order."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}" + (f" ({detail})" if detail else "")
    ACCEPTANCE.append((number, line))
    print(line)
    return ok
