"""Discrete realization: cost matrix, optimal injective assignment, manifest.

Each proxy is matched to one unique sample by minimizing a blended cost of
spatial distance, response distance, topological weakness, and (negated)
coverage confidence, each min-max normalized before weighting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import backend
from .errors import Infeasible, InternalError
from .topology import SparseGraph

MANIFEST_TAG = "cast-coreset v1"


@dataclass
class CostMatrix:
    c: np.ndarray  # K x N blended cost
    d_diff: np.ndarray
    d_wavelet: np.ndarray
    c_topo: np.ndarray  # per-node
    q: np.ndarray  # per-node coverage confidence


@dataclass
class Coreset:
    indices: np.ndarray  # K unique sample indices, proxy order
    ids: list
    costs: np.ndarray  # per-selection assignment cost
    total_cost: float
    k: int
    n: int
    seed: int


def _minmax(x: np.ndarray) -> np.ndarray:
    lo = float(x.min())
    hi = float(x.max())
    if hi <= lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def cost_matrix(
    y: np.ndarray,
    z: np.ndarray,
    phi_z: dict,
    phi_y: dict,
    beta: dict,
    b_star: SparseGraph,
    h_bar: np.ndarray,
    alpha_d: float,
    alpha_w: float,
    alpha_t: float,
    alpha_q: float,
) -> CostMatrix:
    """Blend the four matching-cost components over all (proxy, node) pairs."""
    d_diff = backend.pairwise_sq(y, z)
    d_wav = np.zeros_like(d_diff)
    for s, b in beta.items():
        d_wav += b * backend.pairwise_sq(phi_y[s], phi_z[s])
    wdeg = b_star.weighted_degree()
    mx = float(wdeg.max()) if wdeg.size else 0.0
    c_topo = 1.0 - wdeg / mx if mx > 0.0 else np.zeros_like(wdeg)
    q = np.asarray(h_bar, dtype=np.float64)
    c = (
        alpha_d * _minmax(d_diff)
        + alpha_w * _minmax(d_wav)
        + alpha_t * _minmax(c_topo)[None, :]
        - alpha_q * _minmax(q)[None, :]
    )
    return CostMatrix(c=c, d_diff=d_diff, d_wavelet=d_wav, c_topo=c_topo, q=q)


def hungarian(c: np.ndarray) -> np.ndarray:
    """Minimum-total-cost injective assignment of rows to columns.

    Returns pi with pi[k] = assigned column of row k; total cost is the true
    rectangular optimum.
    """
    c = np.asarray(c, dtype=np.float64)
    k, n = c.shape
    if k > n:
        raise Infeasible(f"{k} proxies but only {n} candidate samples")
    if not np.all(np.isfinite(c)):
        raise InternalError("cost matrix has non-finite entries")
    rows, cols = linear_sum_assignment(c)
    pi = np.empty(k, dtype=np.int64)
    pi[rows] = cols
    return pi


def emit(pi: np.ndarray, c: np.ndarray, ids, path, seed: int) -> Coreset:
    """Write the coreset manifest and return the Coreset.

    Manifest: header `cast-coreset v1 K=<K> N=<N> seed=<seed>`, then one
    `<rank> <index> <id> <cost>` line per selection in proxy order, cost at
    9 significant digits.
    """
    pi = np.asarray(pi, dtype=np.int64)
    k, n = c.shape
    if len(np.unique(pi)) != k:
        raise InternalError("assignment is not injective")
    costs = c[np.arange(k), pi]
    coreset = Coreset(
        indices=pi.copy(),
        ids=[ids[int(i)] for i in pi],
        costs=costs,
        total_cost=float(costs.sum()),
        k=k,
        n=n,
        seed=int(seed),
    )
    write_manifest(coreset, path)
    return coreset


def write_manifest(coreset: Coreset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{MANIFEST_TAG} K={coreset.k} N={coreset.n} seed={coreset.seed}\n")
        for rank, (idx, sid, cost) in enumerate(
            zip(coreset.indices, coreset.ids, coreset.costs)
        ):
            fh.write(f"{rank} {idx} {sid} {cost:.9g}\n")


def read_manifest(path):
    """Parse a manifest back into (indices, ids, costs, k, n, seed)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(MANIFEST_TAG):
        raise InternalError(f"{path}: not a coreset manifest")
    head = dict(part.split("=", 1) for part in lines[0][len(MANIFEST_TAG):].split())
    k, n, seed = int(head["K"]), int(head["N"]), int(head["seed"])
    indices = []
    ids = []
    costs = []
    for ln in lines[1:]:
        _, idx, sid, cost = ln.split(" ", 3)
        indices.append(int(idx))
        ids.append(sid)
        costs.append(float(cost))
    return np.asarray(indices, dtype=np.int64), ids, np.asarray(costs), k, n, seed
