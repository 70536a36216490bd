"""Independent reference implementations used as test oracles.

Nothing here calls the library's residuum, bisection or index code.
"""
import math

SCALAR_OPS = {
    "lukasiewicz": lambda a, b: a + b,
    "max": max,
    "s": lambda a, b: math.sqrt(a * a + b * b),
    "p": lambda a, b: (math.sqrt(a) + math.sqrt(b)) ** 2,
}


def grid_inf_residuum(op, a, b, step=1e-5):
    """Smallest grid point c in [0, b] with op(c, a) >= b (linear scan)."""
    n = int(round(b / step))
    for i in range(n + 1):
        c = i * step
        if op(c, a) >= b:
            return c
    return b


def scan_knn(points, dist, q, k):
    """Sort every (distance, index) pair and keep the first k."""
    scored = sorted((dist(q, p), i) for i, p in enumerate(points))
    return scored[:k]
