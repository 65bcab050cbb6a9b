"""Independent reference computations used to freeze expected values.

Nothing here imports the package's R/A or search code; sums are plain
Python loops over ``itertools.product``.
"""
import itertools
import math

import numpy as np


def brute_R(normf, xs, n):
    k = len(xs)
    total = 0.0
    for eps in itertools.product((1, -1), repeat=k - 1):
        v = np.array(xs[0], dtype=float).copy()
        for e, x in zip(eps, xs[1:]):
            v = v + e * np.asarray(x, dtype=float)
        total += normf(v) ** n
    return total


def brute_A(values, n):
    total = 0.0
    for eps in itertools.product((1, -1), repeat=len(values) - 1):
        base = values[0] + sum(e * v for e, v in zip(eps, values[1:]))
        total += base**n
    return total


def lp(p):
    def f(v):
        # works on one vector or a stack along the last axis
        v = np.abs(np.asarray(v, dtype=float))
        if math.isinf(p):
            out = v.max(axis=-1)
        else:
            out = (v**p).sum(axis=-1) ** (1 / p)
        return float(out) if np.ndim(out) == 0 else out

    return f


def unit_circle(normf, step=1e-2):
    """Points of the unit sphere of a 2-D norm, one per angle step."""
    thetas = np.arange(0.0, 2 * math.pi, step)
    pts = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    return pts / normf(pts)[:, None]


def grid_pair_optimum(normf, n=2.0, step=1e-2):
    """Largest R - A and A - R over pairs of unit vectors (k = 2) on a grid.

    ``normf`` must accept a stack of vectors.
    """
    U = unit_circle(normf, step)
    # pairwise sums and differences, evaluated with the reference norm
    S = (U[:, None, :] + U[None, :, :]).reshape(-1, 2)
    D = (U[:, None, :] - U[None, :, :]).reshape(-1, 2)
    R = normf(S) ** n + normf(D) ** n
    A = 2.0**n  # (1 + 1)^n + (1 - 1)^n for unit pairs
    return float((R - A).max()), float((A - R).max())


def random_spd(rng, d):
    B = rng.standard_normal((d, d))
    return B @ B.T + 0.1 * d * np.eye(d)
