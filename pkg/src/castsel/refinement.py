"""Local collapse detection and bounded cross-modal edge compensation.

Per modality, each node is scored for pattern redundancy (mean cosine of its
edge-weight vector against its neighbors') and neighborhood inseparability
(normalized entropy of its edge weights). Edges whose reliability lags far
behind the other modality's are pulled a bounded step toward that modality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import SparseGraph

_EPS = 1e-12


@dataclass
class CollapseProfile:
    redundancy: np.ndarray  # R_i, mean neighbor pattern cosine
    inseparability: np.ndarray  # S_i, normalized weight entropy
    degradation: np.ndarray  # deg_i = (clamp01(R) + S) / 2


@dataclass
class EdgeReliability:
    """Edge reliability derived from endpoint degradations."""

    degradation: np.ndarray

    def of_pairs(self, ii, jj) -> np.ndarray:
        return 1.0 - np.maximum(self.degradation[ii], self.degradation[jj])


def edge_pattern_vector(graph: SparseGraph, node: int, support) -> np.ndarray:
    """Edge weights of `node` over an ordered candidate index set (0 if absent)."""
    support = np.asarray(support, dtype=np.int64)
    nbr, w = graph.neighbors(node)
    out = np.zeros(len(support), dtype=np.float64)
    pos = {int(j): t for t, j in enumerate(support)}
    for j, wj in zip(nbr, w):
        t = pos.get(int(j))
        if t is not None:
            out[t] = wj
    return out


def relation_redundancy(graph: SparseGraph) -> np.ndarray:
    """Mean cosine between each node's edge pattern and its neighbors' patterns.

    Patterns live over the full index space, so the cosine is support-choice
    independent. Zero-pattern participants contribute cosine 0; isolated nodes
    get R_i = 0.
    """
    b = graph.csr
    n = graph.n
    norms = np.sqrt(np.asarray(b.multiply(b).sum(axis=1)).ravel())
    ii, jj, _ = graph.edges_upper()
    if len(ii) == 0:
        return np.zeros(n)
    dots = np.asarray(b[ii].multiply(b[jj]).sum(axis=1)).ravel()
    denom = norms[ii] * norms[jj]
    cos = np.where(denom > 0.0, dots / np.maximum(denom, _EPS), 0.0)
    acc = np.zeros(n)
    np.add.at(acc, ii, cos)
    np.add.at(acc, jj, cos)
    counts = np.diff(b.indptr)
    return np.where(counts > 0, acc / np.maximum(counts, 1), 0.0)


def neighborhood_inseparability(graph: SparseGraph) -> np.ndarray:
    """Normalized entropy of each node's edge weight distribution.

    Nodes with fewer than two neighbors get 0 (no separability question).
    """
    b = graph.csr
    n = graph.n
    counts = np.diff(b.indptr)
    out = np.zeros(n)
    if b.nnz == 0:
        return out
    row_of = np.repeat(np.arange(n), counts)
    row_sum = np.zeros(n)
    np.add.at(row_sum, row_of, b.data)
    p = b.data / row_sum[row_of]
    terms = -p * np.log(p + _EPS)
    ent = np.zeros(n)
    np.add.at(ent, row_of, terms)
    multi = counts >= 2
    out[multi] = ent[multi] / np.log(counts[multi])
    np.clip(out, 0.0, None, out=out)
    return out


def degradation(redundancy: np.ndarray, inseparability: np.ndarray) -> np.ndarray:
    """Combine the two collapse scores: (clamp01(R) + S) / 2."""
    return (np.clip(redundancy, 0.0, 1.0) + inseparability) / 2.0


def collapse_profile(graph: SparseGraph) -> CollapseProfile:
    r = relation_redundancy(graph)
    s = neighborhood_inseparability(graph)
    return CollapseProfile(redundancy=r, inseparability=s, degradation=degradation(r, s))


def edge_reliability(deg: np.ndarray) -> EdgeReliability:
    """rel_ij = 1 - max(deg_i, deg_j), evaluated lazily per edge."""
    return EdgeReliability(degradation=np.asarray(deg, dtype=np.float64))


def _union_pairs(a: SparseGraph, b: SparseGraph):
    """Union of the two edge sets as (ii, jj) with ii < jj."""
    pattern = ((a.csr != 0) + (b.csr != 0)).tocoo()
    keep = pattern.row < pattern.col
    return pattern.row[keep].astype(np.int64), pattern.col[keep].astype(np.int64)


def _gather(graph: SparseGraph, ii, jj) -> np.ndarray:
    if len(ii) == 0:
        return np.zeros(0)
    return np.asarray(graph.csr[ii, jj]).ravel()


def cross_modal_compensate(
    b_m: SparseGraph,
    b_other: SparseGraph,
    rel_m: EdgeReliability,
    rel_other: EdgeReliability,
    theta: float,
    kappa_max: float,
) -> SparseGraph:
    """Pull unreliable edges toward the other modality, capped at kappa_max.

    On the union edge set, edges where the other modality's reliability
    exceeds this one's by more than theta get
    (1 - kappa) * w_m + kappa * w_other with kappa = min(kappa_max, gap);
    everything else passes through unchanged.
    """
    ii, jj = _union_pairs(b_m, b_other)
    w_m = _gather(b_m, ii, jj)
    w_o = _gather(b_other, ii, jj)
    gap = rel_other.of_pairs(ii, jj) - rel_m.of_pairs(ii, jj)
    kappa = np.where(gap > theta, np.minimum(kappa_max, gap), 0.0)
    w_hat = (1.0 - kappa) * w_m + kappa * w_o
    return SparseGraph.from_edges(b_m.n, ii, jj, w_hat)


def refine_pair(b_img: SparseGraph, b_txt: SparseGraph, theta: float, kappa_max: float):
    """One bidirectional refinement pass over both modality graphs.

    Both directions read the original graphs, so compensation order does not
    matter. Returns (refined img, refined txt, img profile, txt profile).
    """
    prof_i = collapse_profile(b_img)
    prof_t = collapse_profile(b_txt)
    rel_i = edge_reliability(prof_i.degradation)
    rel_t = edge_reliability(prof_t.degradation)
    hat_i = cross_modal_compensate(b_img, b_txt, rel_i, rel_t, theta, kappa_max)
    hat_t = cross_modal_compensate(b_txt, b_img, rel_t, rel_i, theta, kappa_max)
    return hat_i, hat_t, prof_i, prof_t
