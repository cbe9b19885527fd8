"""Jitted kernels (default backend when numba is importable).

Mirrors kernels_np contract-for-contract. Parallel loops only range over
independent output rows, so results are deterministic for any thread count.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, parallel=True)
def _knn_scan_impl(x, k):
    n, d = x.shape
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    for i in nb.prange(n):
        best_d = np.full(k, np.inf)
        best_j = np.full(k, -1, dtype=np.int64)
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                s += t * t
            # keep if strictly closer, or equal but lower index
            if s < best_d[k - 1] or (s == best_d[k - 1] and j < best_j[k - 1]):
                p = k - 1
                while p > 0 and (
                    s < best_d[p - 1] or (s == best_d[p - 1] and j < best_j[p - 1])
                ):
                    best_d[p] = best_d[p - 1]
                    best_j[p] = best_j[p - 1]
                    p -= 1
                best_d[p] = s
                best_j[p] = j
        for t in range(k):
            idx[i, t] = best_j[t]
            dist[i, t] = np.sqrt(best_d[t])
    return idx, dist


def knn_scan(x, k):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _knn_scan_impl(x, k)


@nb.njit(cache=True)
def _solve_sigma_impl(dist, rho, target):
    n, k = dist.shape
    out = np.empty(n)
    for i in range(n):
        nz = 0
        total = 0.0
        dmax = 0.0
        for j in range(k):
            total += dist[i, j]
            if dist[i, j] > 0.0:
                nz += 1
            if dist[i, j] > dmax:
                dmax = dist[i, j]
        mean_nz = total / nz if nz > 0 else 0.0
        lo = max(1e-3 * mean_nz, 1e-8)
        hi = max(1e3 * dmax, lo)

        mass_lo = 0.0
        mass_hi = 0.0
        for j in range(k):
            gap = max(dist[i, j] - rho[i], 0.0)
            mass_lo += np.exp(-gap / lo)
            mass_hi += np.exp(-gap / hi)
        if mass_lo >= target:
            out[i] = lo
            continue
        if mass_hi <= target:
            out[i] = hi
            continue
        a = lo
        b = hi
        for _ in range(64):
            mid = 0.5 * (a + b)
            mass = 0.0
            for j in range(k):
                gap = max(dist[i, j] - rho[i], 0.0)
                mass += np.exp(-gap / mid)
            if mass > target:
                b = mid
            else:
                a = mid
        out[i] = 0.5 * (a + b)
    return out


def solve_sigma_batch(dist, rho, target):
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    return _solve_sigma_impl(dist, rho, float(target))


@nb.njit(cache=True, parallel=True)
def _pairwise_sq_impl(a, b):
    n, d = a.shape
    m = b.shape[0]
    out = np.empty((n, m))
    for i in nb.prange(n):
        for j in range(m):
            s = 0.0
            for c in range(d):
                t = a[i, c] - b[j, c]
                s += t * t
            out[i, j] = s
    return out


def pairwise_sq(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _pairwise_sq_impl(a, b)


@nb.njit(cache=True, parallel=True)
def _pair_sq_impl(z, ii, jj):
    e = ii.shape[0]
    d = z.shape[1]
    out = np.empty(e)
    for t in nb.prange(e):
        s = 0.0
        for c in range(d):
            diff = z[ii[t], c] - z[jj[t], c]
            s += diff * diff
        out[t] = s
    return out


def pair_sq(z, ii, jj):
    z = np.ascontiguousarray(z, dtype=np.float64)
    ii = np.ascontiguousarray(ii, dtype=np.int64)
    jj = np.ascontiguousarray(jj, dtype=np.int64)
    return _pair_sq_impl(z, ii, jj)


@nb.njit(cache=True)
def _farthest_points_impl(x, size, start):
    n, d = x.shape
    chosen = np.empty(size, dtype=np.int64)
    chosen[0] = start
    mind = np.empty(n)
    for j in range(n):
        s = 0.0
        for c in range(d):
            t = x[j, c] - x[start, c]
            s += t * t
        mind[j] = s
    mind[start] = -1.0
    for t in range(1, size):
        nxt = 0
        best = -np.inf
        for j in range(n):
            if mind[j] > best:
                best = mind[j]
                nxt = j
        chosen[t] = nxt
        for j in range(n):
            s = 0.0
            for c in range(d):
                diff = x[j, c] - x[nxt, c]
                s += diff * diff
            if s < mind[j]:
                mind[j] = s
        mind[nxt] = -1.0
    return chosen


def farthest_points(x, size, start):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _farthest_points_impl(x, int(size), int(start))
