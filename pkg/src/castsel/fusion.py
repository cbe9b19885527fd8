"""Diffusion-wavelet consensus fusion of the two refined modality graphs.

Each modality's random-walk operator is probed at several diffusion scales;
scales whose response energy concentrates on few nodes (low entropy) are
treated as structurally collapsed and down-weighted when blending the two
modalities' responses. The blended responses reconstruct one unified graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ShapeMismatch
from .topology import SparseGraph

_EPS = 1e-12


@dataclass
class TransitionMatrix:
    """Row-stochastic random-walk operator; isolated nodes hold a self-loop."""

    csr: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    def apply(self, x: np.ndarray, times: int = 1) -> np.ndarray:
        out = x
        for _ in range(times):
            out = self.csr @ out
        return out


def transition(graph: SparseGraph) -> TransitionMatrix:
    """P = D^-1 B with a unit self-loop on every degree-zero node."""
    deg = graph.weighted_degree()
    isolated = deg <= 0.0
    inv = np.where(isolated, 0.0, 1.0 / np.where(isolated, 1.0, deg))
    p = sp.diags(inv) @ graph.csr
    if isolated.any():
        loop = sp.coo_matrix(
            (np.ones(isolated.sum()), (np.flatnonzero(isolated), np.flatnonzero(isolated))),
            shape=graph.csr.shape,
        )
        p = p + loop
    return TransitionMatrix(csr=sp.csr_matrix(p))


def probe(n: int, q: int, seed) -> np.ndarray:
    """Seeded standard-normal probe block with standardized columns.

    Columns get exactly zero mean and unit variance (ddof=0); degenerate
    constant columns are left as zeros.
    """
    rng = np.random.default_rng(seed)
    out = rng.standard_normal((n, q))
    out -= out.mean(axis=0)
    std = out.std(axis=0)
    good = std > 0.0
    out[:, good] /= std[good]
    out[:, ~good] = 0.0
    return out


def wavelet_response(p: TransitionMatrix, q_mat: np.ndarray, s: int) -> np.ndarray:
    """Band-pass diffusion response P^s Q - P^2s Q via repeated sparse matvec."""
    if s < 1:
        raise ValueError(f"scale must be >= 1, got {s}")
    x1 = p.apply(np.asarray(q_mat, dtype=np.float64), s)
    x2 = p.apply(x1, s)
    return x1 - x2


def response_entropy(w: np.ndarray) -> float:
    """Normalized entropy of the per-node response energy shares, in [0, 1].

    Zero total energy carries no preference and maps to 1; so does a single
    node, whose share distribution is trivially uniform.
    """
    n = w.shape[0]
    if n <= 1:
        return 1.0
    energy = np.einsum("ij,ij->i", w, w)
    total = energy.sum()
    if total <= _EPS:
        return 1.0
    share = energy / (total + _EPS)
    h = -np.sum(share * np.log(share + _EPS)) / np.log(n)
    return float(min(max(h, 0.0), 1.0))


@dataclass
class FusionWeights:
    """Per-scale modality blend derived from response-entropy collapse scores."""

    h_img: float
    h_txt: float
    c_img: float
    c_txt: float
    gamma_img: float
    gamma_txt: float


def fusion_weights(h_img: float, h_txt: float, temperature: float) -> FusionWeights:
    """Softmax over negated collapse scores C = 1 - H, max-shifted for stability."""
    c_i = 1.0 - h_img
    c_t = 1.0 - h_txt
    logits = np.array([-c_i, -c_t]) / temperature
    logits -= logits.max()
    e = np.exp(logits)
    g = e / e.sum()
    return FusionWeights(
        h_img=h_img, h_txt=h_txt, c_img=c_i, c_txt=c_t,
        gamma_img=float(g[0]), gamma_txt=float(g[1]),
    )


def consensus_response(w_img: np.ndarray, w_txt: np.ndarray, gamma: FusionWeights) -> np.ndarray:
    """Convex blend of the two modality responses at one scale."""
    if w_img.shape != w_txt.shape:
        raise ShapeMismatch(f"response shapes differ: {w_img.shape} vs {w_txt.shape}")
    return gamma.gamma_img * w_img + gamma.gamma_txt * w_txt


def union_support(a: SparseGraph, b: SparseGraph):
    """Union of two graphs' edge sets as (ii, jj) with ii < jj."""
    pattern = ((a.csr != 0) + (b.csr != 0)).tocoo()
    keep = pattern.row < pattern.col
    return pattern.row[keep].astype(np.int64), pattern.col[keep].astype(np.int64)


def reconstruct_unified(
    y_targets: dict,
    omega: dict,
    support,
    lambda_sp: float,
    n: int,
) -> SparseGraph:
    """Unified graph from blended responses on the joint candidate edge set.

    Edge weight = sum_s omega_s * max(0, cos(Y_s[i], Y_s[j])), thresholded by
    lambda_sp; zero-weight edges are dropped. Zero rows give cosine 0.
    """
    ii, jj = support
    acc = np.zeros(len(ii))
    for s, y in y_targets.items():
        norms = np.linalg.norm(y, axis=1)
        dots = np.einsum("ij,ij->i", y[ii], y[jj])
        denom = norms[ii] * norms[jj]
        cos = np.where(denom > 0.0, dots / np.maximum(denom, _EPS), 0.0)
        acc += omega[s] * np.maximum(cos, 0.0)
    w = np.maximum(acc - lambda_sp, 0.0)
    keep = w > 0.0
    return SparseGraph.from_edges(n, ii[keep], jj[keep], w[keep])


def fuse(
    hat_img: SparseGraph,
    hat_txt: SparseGraph,
    scales,
    probe_width: int,
    probe_seed,
    temperature: float,
    omega: dict,
    lambda_sp: float,
):
    """Full fusion pass. Returns (B*, per-scale FusionWeights dict).

    Both modalities are probed with the same seeded block so their response
    entropies are comparable.
    """
    n = hat_img.n
    p_img = transition(hat_img)
    p_txt = transition(hat_txt)
    q_mat = probe(n, probe_width, probe_seed)
    support = union_support(hat_img, hat_txt)
    targets = {}
    weights = {}
    for s in scales:
        w_i = wavelet_response(p_img, q_mat, s)
        w_t = wavelet_response(p_txt, q_mat, s)
        gamma = fusion_weights(response_entropy(w_i), response_entropy(w_t), temperature)
        targets[s] = consensus_response(w_i, w_t, gamma)
        weights[s] = gamma
    b_star = reconstruct_unified(targets, omega, support, lambda_sp, n)
    return b_star, weights
