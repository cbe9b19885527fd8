"""Per-modality fuzzy k-NN topology graphs with adaptive local bandwidths.

Each node gets exponential memberships over its k nearest neighbors,
calibrated so the membership mass equals log2(k), then directed edges are
combined into a symmetric graph by the fuzzy union a + b - ab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import backend
from .errors import InternalError, TooFewSamples


class SparseGraph:
    """Immutable symmetric weighted graph, no self-loops, CSR storage."""

    def __init__(self, matrix, validate: bool = True):
        m = sp.csr_matrix(matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        if validate:
            if m.shape[0] != m.shape[1]:
                raise InternalError(f"graph matrix must be square, got {m.shape}")
            if m.nnz and np.any(m.diagonal() != 0.0):
                raise InternalError("graph has self-loops")
            if m.nnz and m.data.min() < 0.0:
                raise InternalError("graph has negative weights")
            asym = abs(m - m.T)
            if asym.nnz and asym.max() > 1e-9:
                raise InternalError("graph is not symmetric")
        self.csr = m
        self.n = m.shape[0]

    @classmethod
    def from_edges(cls, n: int, ii, jj, ww) -> "SparseGraph":
        """Build from unordered unique pairs (each edge listed once)."""
        ii = np.asarray(ii, dtype=np.int64)
        jj = np.asarray(jj, dtype=np.int64)
        ww = np.asarray(ww, dtype=np.float64)
        rows = np.concatenate([ii, jj])
        cols = np.concatenate([jj, ii])
        vals = np.concatenate([ww, ww])
        return cls(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr())

    @property
    def n_edges(self) -> int:
        return self.csr.nnz // 2

    def edges_upper(self):
        """(i, j, w) arrays with i < j, each undirected edge once."""
        coo = self.csr.tocoo()
        keep = coo.row < coo.col
        return coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64), coo.data[keep]

    def neighbors(self, i: int):
        lo, hi = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[lo:hi], self.csr.data[lo:hi]

    def weighted_degree(self) -> np.ndarray:
        return np.asarray(self.csr.sum(axis=1)).ravel()

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def dump_text(self, path) -> None:
        """Serialize as `n=<N>` then one `i j w` line per edge (i < j)."""
        ii, jj, ww = self.edges_upper()
        order = np.lexsort((jj, ii))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"n={self.n}\n")
            for t in order:
                fh.write(f"{ii[t]} {jj[t]} {ww[t]:.9g}\n")


@dataclass
class NeighborList:
    idx: np.ndarray  # (n, k) int64, ascending (distance, index)
    dist: np.ndarray  # (n, k) float64

    @property
    def n(self) -> int:
        return self.idx.shape[0]

    @property
    def k(self) -> int:
        return self.idx.shape[1]


def knn(features, k: int, metric: str = "euclidean") -> NeighborList:
    """Exact k nearest neighbors; ties broken by lower index."""
    if metric != "euclidean":
        raise ValueError(f"unsupported metric {metric!r}")
    x = features.values if hasattr(features, "values") else np.asarray(features)
    n = x.shape[0]
    if n <= k:
        raise TooFewSamples(f"need more than k={k} samples, got {n}")
    idx, dist = backend.knn_scan(np.asarray(x, dtype=np.float64), int(k))
    return NeighborList(idx=idx, dist=dist)


def solve_sigma(distances, rho: float, k: int) -> float:
    """Bandwidth making the membership mass of one node equal log2(k).

    Returns the clamped boundary when the target is unattainable.
    """
    d = np.asarray(distances, dtype=np.float64).reshape(1, -1)
    r = np.asarray([rho], dtype=np.float64)
    return float(backend.solve_sigma_batch(d, r, math.log2(k))[0])


def solve_sigma_all(neigh: NeighborList, k: int) -> np.ndarray:
    """Per-node bandwidths for a whole NeighborList (rho = nearest distance)."""
    rho = neigh.dist[:, 0]
    return backend.solve_sigma_batch(neigh.dist, rho, math.log2(k))


def directed_membership(distances, rho: float, sigma: float) -> np.ndarray:
    """exp(-max(0, d - rho)/sigma) per neighbor; the nearest gets exactly 1."""
    d = np.asarray(distances, dtype=np.float64)
    return np.exp(-np.maximum(d - rho, 0.0) / sigma)


def membership_all(neigh: NeighborList, sigma: np.ndarray) -> np.ndarray:
    """Directed memberships for every node row at once."""
    rho = neigh.dist[:, 0]
    gap = np.maximum(neigh.dist - rho[:, None], 0.0)
    return np.exp(-gap / sigma[:, None])


def fuzzy_union(a, b):
    """Symmetric edge combination a + b - a*b (elementwise)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return a + b - a * b


def symmetrize(neigh: NeighborList, membership: np.ndarray) -> SparseGraph:
    """Combine directed memberships into an undirected fuzzy-union graph."""
    n, k = neigh.idx.shape
    rows = np.repeat(np.arange(n, dtype=np.int64), k)
    a = sp.coo_matrix(
        (membership.ravel(), (rows, neigh.idx.ravel())), shape=(n, n)
    ).tocsr()
    at = a.T.tocsr()
    combined = a + at - a.multiply(at)
    return SparseGraph(combined)


def build_modality_graph(x, k: int):
    """Full per-modality pass: knn -> bandwidths -> memberships -> fuzzy union.

    Returns (graph, neighbor list, sigma).
    """
    neigh = knn(x, k)
    sigma = solve_sigma_all(neigh, k)
    memb = membership_all(neigh, sigma)
    return symmetrize(neigh, memb), neigh, sigma
