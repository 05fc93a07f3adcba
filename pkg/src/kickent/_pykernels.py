"""Pure numpy implementations of the loop kernels (fallback backend)."""
import numpy as np


def diagonal_means(a, start):
    """out[s] = mean_{i >= start, i + s < T} a[i, i + s] for s = 0 .. T-1-start."""
    a = np.asarray(a, dtype=float)
    T = a.shape[0]
    n = T - start
    if n <= 0:
        return np.zeros(0)
    sub = a[start:, start:]
    return np.array([np.diagonal(sub, s).mean() for s in range(n)])


def cumulative_block_sums(a):
    """out[t] = sum of a[:t+1, :t+1]."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros(0)
    c = np.cumsum(np.cumsum(a, axis=0), axis=1)
    return np.diagonal(c).copy()


def sphere_minima(h, north, south):
    """Strict local minima of a (theta, phi) grid on the sphere.

    Each cell is compared with its 8 neighbours; phi wraps around, and the
    first/last theta rows also see a virtual pole cell holding ``north`` /
    ``south``.  The poles are minima when below every cell of the adjacent
    row.  Returns ``(rows, cols, north_is_min, south_is_min)``.
    """
    h = np.asarray(h, dtype=float)
    nt, nphi = h.shape
    big = np.inf
    padded = np.full((nt + 2, nphi), big)
    padded[1:-1] = h
    is_min = np.ones((nt, nphi), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = np.roll(padded, -dj, axis=1)[1 + di : nt + 1 + di]
            is_min &= h < nb
    is_min[0] &= h[0] < north
    is_min[-1] &= h[-1] < south
    rows, cols = np.nonzero(is_min)
    return rows, cols, bool(north < h[0].min()), bool(south < h[-1].min())
