"""Pure-numpy kernels (fallback backend).

Same contracts as the jitted kernels in kernels_nb: exact arithmetic choices
may differ at the last-ulp level between backends, but tie rules (lower index
wins on equal keys) and output shapes are identical.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 512


def knn_scan(x: np.ndarray, k: int):
    """Exact k nearest Euclidean neighbors of every row, self excluded.

    Returns (idx, dist): int64 (n, k) and float64 (n, k), each row sorted by
    ascending (distance, index). Distance ties resolve to the lower index.

    The gram expansion is used only to prune candidates; survivors are
    rescored with direct differences. Gram values carry position-dependent
    rounding from the matrix product, so bitwise-equal rows can otherwise
    land on different sides of a tie.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    sq = np.einsum("ij,ij->i", x, x)
    # bound on |gram - direct| per entry, with wide safety factor
    slack = 1e-9 * (1.0 + sq + sq.max())
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (x[lo:hi] @ x.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        part = np.argpartition(d2, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
        for r in range(hi - lo):
            i = lo + r
            cand = np.flatnonzero(d2[r] <= kth[r] + 2.0 * slack[i])
            exact = ((x[cand] - x[i]) ** 2).sum(axis=1)
            order = np.argsort(exact, kind="stable")[:k]
            idx[i] = cand[order]
            dist[i] = exact[order]
    np.sqrt(dist, out=dist)
    return idx, dist


def solve_sigma_batch(dist: np.ndarray, rho: np.ndarray, target: float):
    """Per-row bandwidth solving sum_j exp(-max(0, d_j - rho)/sigma) = target.

    64 bisection steps on [sigma_min, sigma_max]; rows where the target is
    unattainable return the clamped boundary. sigma_min = max(1e-3 * mean
    nonzero distance, 1e-8); sigma_max = max(1e3 * max distance, sigma_min).
    """
    dist = np.asarray(dist, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    gap = np.maximum(dist - rho[:, None], 0.0)
    nz = np.count_nonzero(dist > 0.0, axis=1)
    mean_nz = dist.sum(axis=1) / np.maximum(nz, 1)
    mean_nz[nz == 0] = 0.0
    lo = np.maximum(1e-3 * mean_nz, 1e-8)
    hi = np.maximum(1e3 * dist.max(axis=1), lo)

    def mass(sigma):
        return np.exp(-gap / sigma[:, None]).sum(axis=1)

    at_lo = mass(lo) >= target
    at_hi = ~at_lo & (mass(hi) <= target)
    a = lo.copy()
    b = hi.copy()
    for _ in range(64):
        mid = 0.5 * (a + b)
        too_big = mass(mid) > target
        b = np.where(too_big, mid, b)
        a = np.where(too_big, a, mid)
    out = 0.5 * (a + b)
    out[at_lo] = lo[at_lo]
    out[at_hi] = hi[at_hi]
    return out


def pairwise_sq(a: np.ndarray, b: np.ndarray):
    """All-pairs squared Euclidean distances, shape (len(a), len(b))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = (
        np.einsum("ij,ij->i", a, a)[:, None]
        + np.einsum("ij,ij->i", b, b)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def pair_sq(z: np.ndarray, ii: np.ndarray, jj: np.ndarray):
    """Squared distances between selected row pairs z[ii[t]], z[jj[t]]."""
    diff = z[ii] - z[jj]
    return np.einsum("ij,ij->i", diff, diff)


def farthest_points(x: np.ndarray, size: int, start: int):
    """Greedy max-min (farthest point) selection of `size` row indices.

    Ties resolve to the lower index; already-chosen rows are never re-picked,
    so the result is a permutation prefix even on fully duplicate inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    chosen = np.empty(size, dtype=np.int64)
    chosen[0] = start
    diff = x - x[start]
    mind = np.einsum("ij,ij->i", diff, diff)
    mind[start] = -1.0
    for t in range(1, size):
        nxt = int(np.argmax(mind))
        chosen[t] = nxt
        diff = x - x[nxt]
        d = np.einsum("ij,ij->i", diff, diff)
        np.minimum(mind, d, out=mind)
        mind[nxt] = -1.0
    return chosen
